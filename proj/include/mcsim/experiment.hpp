#ifndef MCSIM_EXPERIMENT_HPP
#define MCSIM_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mcsim/classifier.hpp"
#include "mcsim/config.hpp"
#include "mcsim/search.hpp"
#include "mcsim/tactile.hpp"

namespace mcsim {

/// One Monte-Carlo trial: the search outcome plus, on success, the sampled
/// contact misalignment, the three per-axis classifier readings, and the
/// safety-gate decision taken on the angular reading. The contact fields are
/// meaningful only when outcome.success and stay at their defaults otherwise.
struct TrialRecord {
    int trial_id = 0;
    double omega_deg = 0.0;
    double range_cm = 0.0;
    std::uint64_t seed = 0;
    SearchOutcome outcome{};

    MisalignmentParams misalignment_true{};
    MisalignmentLabel predicted_angular{MisalignmentKind::Angular, 0};
    MisalignmentLabel predicted_vertical{MisalignmentKind::Vertical, 0};
    MisalignmentLabel predicted_horizontal{MisalignmentKind::Horizontal, 0};
    GateDecision gate = GateDecision::Abort;
};

/// The three per-axis contact classifiers used to grade a docked trial.
struct ClassifierBundle {
    CnnModel angular;
    CnnModel vertical;
    CnnModel horizontal;
};

// Wire names for the enums that appear in exported records.
const char* to_string(SearchReason r);
SearchReason search_reason_from_string(const std::string& s);
const char* to_string(GateDecision g);
GateDecision gate_from_string(const std::string& s);

/// Train one per-axis model on a freshly generated synthetic dataset;
/// dataset and training seeds are derived from the master seed so the result
/// equals the corresponding member of train_bundle(cfg, master_seed).
CnnModel train_axis_model(const HarnessConfig& cfg, MisalignmentKind kind,
                          std::uint64_t master_seed, TrainReport* report = nullptr);

/// All three per-axis models via train_axis_model.
ClassifierBundle train_bundle(const HarnessConfig& cfg, std::uint64_t master_seed);

/// Run the full grid: trials_per_omega searches per starting angle with
/// per-trial seeds derived from (master seed, angle index, trial index).
/// Each successful docking is graded: a true misalignment is sampled per
/// axis, tactile frames are synthesized at the configured noise level,
/// classified with the matching model, and the angular reading drives the
/// safety gate. Deterministic in (cfg, master_seed). The single-argument
/// overload first trains a bundle with train_bundle.
std::vector<TrialRecord> run_experiment(const HarnessConfig& cfg, std::uint64_t master_seed,
                                        const ClassifierBundle& models);
std::vector<TrialRecord> run_experiment(const HarnessConfig& cfg, std::uint64_t master_seed);

/// Overall fraction of successful trials. Throws OutOfRangeError when empty.
double success_rate(const std::vector<TrialRecord>& records);

struct OmegaRate {
    double omega_deg = 0.0;
    double rate = 0.0;
    int trials = 0;
};

/// Per-starting-angle rates, angles in first-appearance order.
std::vector<OmegaRate> success_rate_by_omega(const std::vector<TrialRecord>& records);

/// Success indicators (0/1) grouped by starting angle, in first-appearance
/// order: the shape one_way_anova expects.
std::vector<std::vector<double>> success_groups_by_omega(
    const std::vector<TrialRecord>& records);

// Persistence. Both formats round-trip losslessly; the CSV has one header
// row and leaves contact columns empty on failed trials.
std::string records_to_json(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> records_from_json(const std::string& text);
void save_records_json(const std::vector<TrialRecord>& records, const std::string& path);
std::vector<TrialRecord> load_records_json(const std::string& path);

std::string records_to_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> records_from_csv(const std::string& text);
void save_records_csv(const std::vector<TrialRecord>& records, const std::string& path);
std::vector<TrialRecord> load_records_csv(const std::string& path);

} // namespace mcsim

#endif // MCSIM_EXPERIMENT_HPP
