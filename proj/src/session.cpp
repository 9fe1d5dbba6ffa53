#include "qnet/session.hpp"

#include "qnet/procedures.hpp"

namespace qnet {

std::string_view to_string(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::Requested: return "Requested";
    case SessionPhase::Routing: return "Routing";
    case SessionPhase::PathsNotified: return "PathsNotified";
    case SessionPhase::VerifyClassical: return "VerifyClassical";
    case SessionPhase::VerifyQuantum: return "VerifyQuantum";
    case SessionPhase::CalibAlignment: return "CalibAlignment";
    case SessionPhase::CalibBitSync: return "CalibBitSync";
    case SessionPhase::CalibDelayScan: return "CalibDelayScan";
    case SessionPhase::Ready: return "Ready";
    case SessionPhase::Entangling: return "Entangling";
    case SessionPhase::Ending: return "Ending";
    case SessionPhase::Complete: return "Complete";
    case SessionPhase::Rejected: return "Rejected";
    case SessionPhase::Failed: return "Failed";
  }
  return "?";
}

bool is_terminal(SessionPhase phase) {
  return phase == SessionPhase::Complete || phase == SessionPhase::Rejected || phase == SessionPhase::Failed;
}

std::string describe(const SessionState& state) {
  switch (state.phase) {
    case SessionPhase::Complete: return state.complete ? "Complete" : "Incomplete";
    case SessionPhase::Failed:
    case SessionPhase::Rejected: return std::string(to_string(state.phase)) + "(" + state.cause + ")";
    default: return std::string(to_string(state.phase));
  }
}

namespace {

class Stepper {
 public:
  Stepper(const SessionState& s, const SessionContext& ctx, const Message& msg) : ctx_(ctx), msg_(msg) {
    out_.state = s;
  }

  StepResult run() {
    auto& st = out_.state;
    if (is_terminal(st.phase)) return out_;

    const bool ctrl = msg_.sender == kControllerId;
    if (ctrl && msg_.kind == MsgKind::Timeout) {
      fail(msg_.has<CauseBody>() ? msg_.body<CauseBody>().cause : "timeout");
      return out_;
    }

    switch (st.phase) {
      case SessionPhase::Requested:
        if (ctrl && msg_.kind == MsgKind::Accept) return go(SessionPhase::Routing);
        if (ctrl && msg_.kind == MsgKind::Reject) return reject();
        break;

      case SessionPhase::Routing:
        if (ctrl && msg_.kind == MsgKind::PathsEstablished && msg_.has<PathsBody>()) {
          st.phase = SessionPhase::PathsNotified;
          const auto& body = msg_.body<PathsBody>();
          for (const auto& to : {ctx_.request.qnode_1.str(), ctx_.request.qnode_2.str(), body.eps.str()})
            emit(MsgKind::PathsEstablished, to, body);
          return out_;
        }
        if (ctrl && msg_.kind == MsgKind::RouteBlocked) {
          retry_or_fail("exhausted");
          return out_;
        }
        if (ctrl && msg_.kind == MsgKind::Reject) return reject();
        break;

      case SessionPhase::PathsNotified:
      case SessionPhase::VerifyClassical:
        if (msg_.kind == MsgKind::ClassicalPowerReport && msg_.has<PowerBody>()) {
          const int arm = arm_of_sender();
          const auto& p = msg_.body<PowerBody>();
          if (arm < 0 || p.arm != arm + 1 || st.classical_ok[arm]) break;
          const auto v = verify_path_classical(p.injected_dbm, p.measured_dbm, ctx_.predicted_loss_db[arm],
                                               ctx_.config.power_tolerance_db);
          if (!v.ok) {
            retry_or_fail(v.cause);
            return out_;
          }
          st.phase = SessionPhase::VerifyClassical;
          st.classical_ok[arm] = true;
          st.est_loss_db[arm] = v.loss_db;
          if (st.classical_ok[0] && st.classical_ok[1]) {
            st.phase = SessionPhase::VerifyQuantum;
            emit(MsgKind::ProbeQuantum, ctx_.eps.str(),
                 ProbeBody{st.est_loss_db[0], st.est_loss_db[1], ctx_.config.probe_duration_s});
          }
          return out_;
        }
        break;

      case SessionPhase::VerifyQuantum:
        if (msg_.kind == MsgKind::PathVerified) {
          const int arm = arm_of_sender();
          if (arm < 0 || st.verified[arm]) break;
          st.verified[arm] = true;
          if (st.verified[0] && st.verified[1]) enter_alignment();
          return out_;
        }
        if (msg_.kind == MsgKind::PathVerifyFailed && arm_of_sender() >= 0) {
          retry_or_fail(msg_.has<CauseBody>() ? msg_.body<CauseBody>().cause : "verify");
          return out_;
        }
        break;

      case SessionPhase::CalibAlignment: {
        const int arm = arm_of_sender();
        const bool timebin = ctx_.request.qubit_type == QubitEncoding::TimeBin;
        if (arm < 0) break;
        if (msg_.kind == MsgKind::BinsIdentified && timebin && !st.bins[arm]) {
          st.bins[arm] = true;
          if (st.bins[0] && st.bins[1]) emit(MsgKind::SendAlignment, ctx_.eps.str(), AlignBody{"phase", 0.0});
          return out_;
        }
        if (msg_.kind == MsgKind::AlignmentDone && !st.aligned[arm] && (!timebin || (st.bins[0] && st.bins[1]))) {
          st.aligned[arm] = true;
          if (st.aligned[0] && st.aligned[1]) {
            st.phase = SessionPhase::CalibBitSync;
            emit(MsgKind::CalibPairs, ctx_.eps.str());
            emit(MsgKind::DelayRange, ctx_.request.qnode_1.str(), ctx_.delay_range);
            emit(MsgKind::DelayRange, ctx_.request.qnode_2.str(), ctx_.delay_range);
          }
          return out_;
        }
        if (msg_.kind == MsgKind::AlignmentFailed) {
          fail(msg_.has<CauseBody>() ? msg_.body<CauseBody>().cause : "alignment");
          return out_;
        }
        break;
      }

      case SessionPhase::CalibBitSync:
      case SessionPhase::CalibDelayScan:
        if (msg_.kind == MsgKind::Ready) {
          const int who = entity_of_sender();
          if (who < 0 || st.ready[who]) break;
          st.ready[who] = true;
          maybe_ready();
          return out_;
        }
        if (msg_.kind == MsgKind::BitSyncDone && st.phase == SessionPhase::CalibBitSync && arm_of_sender() == 1) {
          st.phase = SessionPhase::CalibDelayScan;
          return out_;
        }
        if (msg_.kind == MsgKind::SyncDone && st.phase == SessionPhase::CalibDelayScan && arm_of_sender() == 1 &&
            !st.synced) {
          st.synced = true;
          maybe_ready();
          return out_;
        }
        if (msg_.kind == MsgKind::SyncFailed && arm_of_sender() == 1) {
          fail("sync");
          return out_;
        }
        break;

      case SessionPhase::Ready:
        if (ctrl && msg_.kind == MsgKind::Start) {
          st.phase = SessionPhase::Entangling;
          emit(MsgKind::Start, ctx_.eps.str());
          return out_;
        }
        break;

      case SessionPhase::Entangling:
        if (msg_.kind == MsgKind::End && arm_of_sender() == 1 && msg_.has<SummaryBody>()) {
          const auto& s = msg_.body<SummaryBody>();
          st.phase = SessionPhase::Ending;
          st.ebits = s.ebits;
          st.complete = s.complete;
          for (const auto& to : {ctx_.eps.str(), ctx_.request.qnode_1.str(), ctx_.request.qnode_2.str()})
            emit(MsgKind::End, to, s);
          return out_;
        }
        if (msg_.kind == MsgKind::CalibrationLost && arm_of_sender() >= 0) {
          enter_alignment();
          return out_;
        }
        break;

      case SessionPhase::Ending:
        if (msg_.kind == MsgKind::ResultsPosted) {
          const int arm = arm_of_sender();
          if (arm < 0 || st.results[arm]) break;
          st.results[arm] = true;
          if (st.results[0] && st.results[1]) st.phase = SessionPhase::Complete;
          return out_;
        }
        break;

      default:
        break;
    }
    out_.violation = true;
    fail("protocol_violation");
    return out_;
  }

 private:
  StepResult go(SessionPhase phase) {
    out_.state.phase = phase;
    return out_;
  }

  StepResult reject() {
    out_.state.phase = SessionPhase::Rejected;
    out_.state.cause = msg_.has<CauseBody>() ? msg_.body<CauseBody>().cause : "rejected";
    emit(MsgKind::Reject, ctx_.request.qnode_1.str(), CauseBody{out_.state.cause});
    return out_;
  }

  int arm_of_sender() const {
    if (msg_.sender == ctx_.request.qnode_1.str()) return 0;
    if (msg_.sender == ctx_.request.qnode_2.str()) return 1;
    return -1;
  }

  int entity_of_sender() const {
    const int arm = arm_of_sender();
    if (arm >= 0) return arm;
    return !ctx_.eps.empty() && msg_.sender == ctx_.eps.str() ? 2 : -1;
  }

  void emit(MsgKind kind, const std::string& to, Payload payload = {}) {
    out_.emitted.push_back(make_message(kind, kControllerId, to, ctx_.id, std::move(payload)));
  }

  bool entities_engaged() const {
    const auto p = out_.state.phase;
    return p != SessionPhase::Requested && p != SessionPhase::Routing && !ctx_.eps.empty();
  }

  void abort_entities(const std::string& cause) {
    for (const auto& to : {ctx_.request.qnode_1.str(), ctx_.request.qnode_2.str(), ctx_.eps.str()})
      emit(MsgKind::Abort, to, CauseBody{cause});
  }

  void reset_progress() {
    auto& st = out_.state;
    st.classical_ok = {};
    st.est_loss_db = {};
    st.verified = {};
    reset_calibration();
  }

  void reset_calibration() {
    auto& st = out_.state;
    st.bins = {};
    st.aligned = {};
    st.ready = {};
    st.synced = false;
  }

  void fail(const std::string& cause) {
    if (entities_engaged()) abort_entities(cause);
    out_.state.phase = SessionPhase::Failed;
    out_.state.cause = cause;
  }

  void retry_or_fail(const std::string& cause) {
    auto& st = out_.state;
    if (st.retry_count >= ctx_.config.max_retries) {
      fail("exhausted");
      return;
    }
    if (entities_engaged()) abort_entities(cause);
    ++st.retry_count;
    st.phase = SessionPhase::Routing;
    st.cause = cause;
    reset_progress();
  }

  void enter_alignment() {
    auto& st = out_.state;
    st.phase = SessionPhase::CalibAlignment;
    reset_calibration();
    if (ctx_.request.qubit_type == QubitEncoding::TimeBin) {
      emit(MsgKind::SendEarlyLate, ctx_.eps.str(), EarlyLateBody{"early"});
      emit(MsgKind::SendEarlyLate, ctx_.eps.str(), EarlyLateBody{"late"});
    } else {
      emit(MsgKind::SendAlignment, ctx_.eps.str(), AlignBody{ctx_.request.calib_basis, 0.0});
    }
  }

  void maybe_ready() {
    auto& st = out_.state;
    if (st.phase == SessionPhase::CalibDelayScan && st.synced && st.ready[0] && st.ready[1] && st.ready[2])
      st.phase = SessionPhase::Ready;
  }

  const SessionContext& ctx_;
  const Message& msg_;
  StepResult out_;
};

}  // namespace

StepResult step_state(const SessionState& state, const SessionContext& ctx, const Message& msg) {
  return Stepper(state, ctx, msg).run();
}

}  // namespace qnet
