#ifndef MCSIM_SEARCH_HPP
#define MCSIM_SEARCH_HPP

#include <cstdint>
#include <vector>

#include "mcsim/delta_kin.hpp"
#include "mcsim/geometry.hpp"
#include "mcsim/world.hpp"

namespace mcsim {

// Electrode-search controller constants. These are part of the algorithm
// itself, not tunables: changing them changes the procedure.
inline constexpr double kBearingToleranceDeg = 1.0; // "centered" means within this
inline constexpr double kRotateStepDeg = 1.0;
inline constexpr double kAdvanceStepCm = 1.0;
inline constexpr double kEndgameDistanceCm = 11.0;  // close enough for the final move
// The canonical straight-line run measures the endgame range exactly at the
// threshold; this slack keeps the comparison robust to frame round-trips.
inline constexpr double kEndgameSlackCm = 1e-9;
inline constexpr double kFinalAdvanceCm = 4.0;
inline constexpr int kMaxDetectionAttempts = 5;

/// Wall-clock cost of each primitive, used to report a simulated duration.
struct SearchTiming {
    double detect_s = 0.8;
    double rotate_s = 0.5;
    double advance_s_per_cm = 1.0;
};

enum class SearchPhase { Detecting, Rotating, Advancing, FinalApproach, Done, Failed };

enum class SearchReason { Reached, NotInView, Unreachable };

/// Mutable controller state threaded through step(). phase records the mode
/// of the last transition; FinalApproach means the endgame range was just
/// measured and the closing 4 cm move is still pending.
struct SearchState {
    SearchPhase phase = SearchPhase::Detecting;
    int attempts_left = kMaxDetectionAttempts;
    int steps = 0;          // rotate/advance actions taken
    double sim_time_s = 0.0;

    // Target measurement frozen when the endgame range is reached, actuator
    // frame. After the final move its Z is reduced by the advance.
    Vec3 pending_target_delta{};
    Vec3 final_target_delta{};

    bool terminal() const {
        return phase == SearchPhase::Done || phase == SearchPhase::Failed;
    }
};

struct SearchOutcome {
    bool success = false;
    SearchReason reason = SearchReason::NotInView;
    int steps = 0;
    double sim_time_s = 0.0;
    Vec3 final_target_delta_frame{};  // meaningful only when success
};

struct StepResult {
    SearchState state;
    WorldState world;
};

/// One iteration of the search loop: a detection attempt, then (on a hit)
/// an optional 1 degree rotation toward the measured bearing and either a
/// 1 cm advance or, once the measured range drops to the endgame distance,
/// a hand-off to FinalApproach. A FinalApproach input performs the closing
/// 4 cm move and terminates. Throws InvalidStateError on terminal input.
StepResult step(const SearchState& s, const WorldState& w, const DetectorModel& d,
                Rng& rng, const SearchTiming& timing = {});

/// Run the controller to termination and grade the outcome: Done becomes
/// Reached only when the recorded target (after the 4 cm Z correction) lies
/// in the actuator workspace, else Unreachable; five consecutive missed
/// detections give NotInView.
SearchOutcome run_search(const WorldState& w, const DetectorModel& d, std::uint64_t seed,
                         const SearchTiming& timing = {}, const DeltaGeometry& geometry = {});

/// Coverage pattern for the coarse exploration stage: concentric circles of
/// radius 50..250 cm in 50 cm increments around the given pose, 8 waypoints
/// per circle starting at the pose's own heading, inner circles first. Each
/// waypoint faces back toward the center.
std::vector<Pose2> exploration_waypoints(const Pose2& center);

} // namespace mcsim

#endif // MCSIM_SEARCH_HPP
