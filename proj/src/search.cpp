#include "mcsim/search.hpp"

#include <cmath>

#include "mcsim/errors.hpp"

namespace mcsim {

StepResult step(const SearchState& s, const WorldState& w, const DetectorModel& d,
                Rng& rng, const SearchTiming& timing) {
    if (s.terminal())
        throw InvalidStateError("step: search already terminated");

    SearchState ns = s;
    WorldState nw = w;

    if (s.phase == SearchPhase::FinalApproach) {
        nw = advance(nw, kFinalAdvanceCm);
        ns.steps += 1;
        ns.sim_time_s += kFinalAdvanceCm * timing.advance_s_per_cm;
        ns.final_target_delta = s.pending_target_delta - Vec3{0, 0, kFinalAdvanceCm};
        ns.phase = SearchPhase::Done;
        return {ns, nw};
    }

    ns.sim_time_s += timing.detect_s;
    const Observation obs = observe(nw, d, rng);
    if (!obs.detected) {
        ns.attempts_left -= 1;
        ns.phase = ns.attempts_left <= 0 ? SearchPhase::Failed : SearchPhase::Detecting;
        return {ns, nw};
    }
    ns.attempts_left = kMaxDetectionAttempts;

    const Vec3 m = camera_to_delta(obs.bbox_center_cam);
    const double bearing_deg = rad_to_deg(std::atan2(m.x, m.z));

    bool rotated = false;
    if (std::abs(bearing_deg) > kBearingToleranceDeg) {
        nw = rotate(nw, bearing_deg > 0 ? kRotateStepDeg : -kRotateStepDeg);
        ns.steps += 1;
        ns.sim_time_s += timing.rotate_s;
        rotated = true;
    }

    if (obs.distance_cm <= kEndgameDistanceCm + kEndgameSlackCm) {
        ns.pending_target_delta = m;
        ns.phase = SearchPhase::FinalApproach;
        return {ns, nw};
    }

    nw = advance(nw, kAdvanceStepCm);
    ns.steps += 1;
    ns.sim_time_s += kAdvanceStepCm * timing.advance_s_per_cm;
    ns.phase = rotated ? SearchPhase::Rotating : SearchPhase::Advancing;
    return {ns, nw};
}

SearchOutcome run_search(const WorldState& w, const DetectorModel& d, std::uint64_t seed,
                         const SearchTiming& timing, const DeltaGeometry& geometry) {
    const double initial_range =
        std::hypot(w.electrode_pos.x - w.charger.x_cm, w.electrode_pos.y - w.charger.y_cm);
    const int step_budget =
        kMaxDetectionAttempts + 2 * static_cast<int>(std::ceil(initial_range)) + 360;
    // Detection attempts sit between actions, so calls are bounded by a
    // small multiple of the action budget.
    const int call_budget = (kMaxDetectionAttempts + 1) * (step_budget + 2);

    Rng rng(seed);
    SearchState s;
    WorldState cur = w;
    for (int call = 0; call < call_budget && !s.terminal(); ++call) {
        StepResult r = step(s, cur, d, rng, timing);
        s = r.state;
        cur = r.world;
        if (s.steps > step_budget) break;
    }

    SearchOutcome out;
    out.steps = s.steps;
    out.sim_time_s = s.sim_time_s;
    if (s.phase == SearchPhase::Done) {
        if (in_workspace(geometry, s.final_target_delta)) {
            out.success = true;
            out.reason = SearchReason::Reached;
            out.final_target_delta_frame = s.final_target_delta;
        } else {
            out.success = false;
            out.reason = SearchReason::Unreachable;
        }
    } else {
        out.success = false;
        out.reason = SearchReason::NotInView;
    }
    return out;
}

std::vector<Pose2> exploration_waypoints(const Pose2& center) {
    std::vector<Pose2> out;
    out.reserve(40);
    for (int ring = 1; ring <= 5; ++ring) {
        const double radius = 50.0 * ring;
        for (int k = 0; k < 8; ++k) {
            const double bearing = center.yaw_deg + 45.0 * k;
            const double br = deg_to_rad(bearing);
            Pose2 p;
            p.x_cm = center.x_cm + radius * std::sin(br);
            p.y_cm = center.y_cm + radius * std::cos(br);
            p.yaw_deg = normalize_yaw(bearing + 180.0);
            out.push_back(p);
        }
    }
    return out;
}

} // namespace mcsim
