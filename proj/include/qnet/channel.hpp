#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Band { O, C };

std::string_view to_string(Band band);
Band parse_band(std::string_view text);

/// Speed of light in vacuum, km/s.
inline constexpr double kSpeedOfLightKmPerS = 299792.458;

/// Band edges in nm (inclusive).
inline constexpr double kCBandMinNm = 1525.0;
inline constexpr double kCBandMaxNm = 1565.0;
inline constexpr double kOBandMinNm = 1290.0;
inline constexpr double kOBandMaxNm = 1350.0;

/// DWDM grid spacing in GHz; also the widest allowed channel.
inline constexpr double kGridSpacingGhz = 100.0;

/// Minimum quantum-above-classical frequency gap for co-propagation, THz.
inline constexpr double kCoexistenceGapThz = 20.0;

double wavelength_nm_to_thz(double wavelength_nm);
double thz_to_wavelength_nm(double freq_thz);

/// One routable optical channel.
///
/// Labels follow three forms:
///   `C<nn>`  ITU DWDM C-band channel, center 190.0 + 0.1*nn THz (C32 = 1551.72 nm)
///   `O<nn>`  100 GHz O-band grid, center 220.0 + 0.1*nn THz
///   `<f>THz` explicit center frequency
/// Channels are stored in THz; the band is derived from the frequency.
struct WavelengthChannel {
  std::string label;
  double center_freq_thz = 0.0;
  Band band = Band::C;
  double width_ghz = kGridSpacingGhz;

  double wavelength_nm() const { return thz_to_wavelength_nm(center_freq_thz); }

  bool operator==(const WavelengthChannel&) const = default;
};

/// Parses a channel label; throws qnet::Error when the label is malformed or
/// the frequency falls outside both the O and C bands.
WavelengthChannel parse_channel(std::string_view label);

/// The classical sync channel shared by receiver pairs (ITU C32, 1551.72 nm).
const WavelengthChannel& sync_channel();

}  // namespace qnet
