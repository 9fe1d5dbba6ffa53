#include "qnet/channel.hpp"

#include <charconv>
#include <cmath>
#include <optional>

namespace qnet {

std::string_view to_string(Band band) { return band == Band::O ? "O" : "C"; }

Band parse_band(std::string_view text) {
  if (text == "O" || text == "o") return Band::O;
  if (text == "C" || text == "c") return Band::C;
  throw Error("unknown band '" + std::string(text) + "' (expected O or C)");
}

double wavelength_nm_to_thz(double wavelength_nm) { return kSpeedOfLightKmPerS / wavelength_nm; }

double thz_to_wavelength_nm(double freq_thz) { return kSpeedOfLightKmPerS / freq_thz; }

namespace {

std::optional<Band> band_of(double freq_thz) {
  const double nm = thz_to_wavelength_nm(freq_thz);
  if (nm >= kCBandMinNm && nm <= kCBandMaxNm) return Band::C;
  if (nm >= kOBandMinNm && nm <= kOBandMaxNm) return Band::O;
  return std::nullopt;
}

std::optional<int> parse_index(std::string_view digits) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) return std::nullopt;
  return value;
}

}  // namespace

WavelengthChannel parse_channel(std::string_view label) {
  const std::string text(label);
  double freq = 0.0;
  if (label.size() > 3 && label.substr(label.size() - 3) == "THz") {
    std::string_view number = label.substr(0, label.size() - 3);
    auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), freq);
    if (ec != std::errc{} || ptr != number.data() + number.size())
      throw Error("malformed channel frequency '" + text + "'");
  } else if (!label.empty() && (label[0] == 'C' || label[0] == 'O')) {
    auto index = parse_index(label.substr(1));
    if (!index) throw Error("malformed channel label '" + text + "'");
    // integer tenths keep the grid frequencies exact
    const int base_tenths = label[0] == 'C' ? 1900 : 2200;
    freq = static_cast<double>(base_tenths + *index) / 10.0;
  } else {
    throw Error("malformed channel label '" + text + "'");
  }
  if (!(freq > 0.0) || !std::isfinite(freq)) throw Error("channel '" + text + "' has no valid frequency");
  auto band = band_of(freq);
  if (!band) throw Error("channel '" + text + "' lies outside the O and C bands");
  if (label[0] == 'C' && *band != Band::C) throw Error("channel '" + text + "' is not inside the C band");
  if (label[0] == 'O' && *band != Band::O) throw Error("channel '" + text + "' is not inside the O band");
  return WavelengthChannel{text, freq, *band, kGridSpacingGhz};
}

const WavelengthChannel& sync_channel() {
  static const WavelengthChannel channel = parse_channel("C32");
  return channel;
}

}  // namespace qnet
