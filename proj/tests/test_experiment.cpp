#include <doctest.h>

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcsim/errors.hpp"
#include "mcsim/experiment.hpp"
#include "mcsim/rng.hpp"

using namespace mcsim;

namespace {

// One small bundle shared by every case; experiment-shape checks do not
// depend on classifier quality, so a cheap training run is enough.
const ClassifierBundle& cheap_bundle() {
    static const ClassifierBundle bundle = [] {
        HarnessConfig cfg;
        cfg.tactile.n_per_class = 20;
        cfg.train.epochs = 6;
        return train_bundle(cfg, 11);
    }();
    return bundle;
}

std::vector<TrialRecord> synthetic_records(int n, int wins) {
    std::vector<TrialRecord> records;
    const double omegas[] = {-20, -10, 0, 10, 20};
    for (int i = 0; i < n; ++i) {
        TrialRecord r;
        r.trial_id = i;
        r.omega_deg = omegas[i % 5];
        r.range_cm = 25.0;
        r.seed = derive_seed(1, 0, i);
        r.outcome.success = i < wins;
        r.outcome.reason = i < wins ? SearchReason::Reached : SearchReason::NotInView;
        records.push_back(r);
    }
    return records;
}

std::string temp_path(const char* name) {
    return std::string("/tmp/mcsim_experiment_") + name;
}

} // namespace

TEST_CASE("experiment produces the full trial grid") {
    HarnessConfig cfg;
    const std::vector<TrialRecord> records = run_experiment(cfg, 5, cheap_bundle());
    REQUIRE(records.size() == 100);

    for (std::size_t i = 0; i < records.size(); ++i) {
        const TrialRecord& r = records[i];
        CHECK(r.trial_id == static_cast<int>(i));
        CHECK(r.range_cm == 25.0);
        const std::size_t omega_index = i / 20;
        CHECK(r.omega_deg == cfg.experiment.omegas_deg[omega_index]);
        CHECK(r.seed == derive_seed(5, omega_index, i % 20));
        CHECK(r.outcome.success == (r.outcome.reason == SearchReason::Reached));
        if (r.outcome.success) {
            CHECK(r.predicted_angular.kind == MisalignmentKind::Angular);
            CHECK(r.predicted_vertical.kind == MisalignmentKind::Vertical);
            CHECK(r.predicted_horizontal.kind == MisalignmentKind::Horizontal);
        } else {
            // Contact fields stay at their defaults on failure.
            CHECK(r.misalignment_true.phi_deg == 0.0);
            CHECK(r.misalignment_true.dx_mm == 0.0);
            CHECK(r.misalignment_true.dy_mm == 0.0);
            CHECK(r.gate == GateDecision::Abort);
        }
    }

    const std::vector<OmegaRate> rates = success_rate_by_omega(records);
    REQUIRE(rates.size() == 5);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        CHECK(rates[i].omega_deg == cfg.experiment.omegas_deg[i]);
        CHECK(rates[i].trials == 20);
    }
    CHECK(success_rate(records) > 0.5);
}

TEST_CASE("noise-free detector wins every trial") {
    HarnessConfig cfg;
    cfg.detector.miss_prob = 0.0;
    cfg.detector.center_noise_sigma_cm = 0.0;
    const std::vector<TrialRecord> records = run_experiment(cfg, 3, cheap_bundle());
    REQUIRE(records.size() == 100);
    CHECK(success_rate(records) == 1.0);
    for (const TrialRecord& r : records) {
        CHECK(r.outcome.success);
        // The sampled misalignment encodes one class per axis.
        CHECK(r.misalignment_true.phi_deg >= 0.0);
        CHECK(r.misalignment_true.phi_deg <= 5.0);
        CHECK(std::abs(r.misalignment_true.dx_mm) <= 10.0);
        CHECK(std::abs(r.misalignment_true.dy_mm) <= 10.0);
    }
}

TEST_CASE("same master seed replays identical records") {
    HarnessConfig cfg;
    cfg.experiment.trials_per_omega = 6;
    const std::vector<TrialRecord> a = run_experiment(cfg, 21, cheap_bundle());
    const std::vector<TrialRecord> b = run_experiment(cfg, 21, cheap_bundle());
    CHECK(records_to_json(a) == records_to_json(b));
    CHECK(records_to_csv(a) == records_to_csv(b));

    const std::vector<TrialRecord> c = run_experiment(cfg, 22, cheap_bundle());
    CHECK(records_to_json(a) != records_to_json(c));
}

TEST_CASE("success rates: exact fraction and weighted-average identity") {
    const std::vector<TrialRecord> records = synthetic_records(100, 83);
    CHECK(success_rate(records) == 0.83);

    const std::vector<OmegaRate> rates = success_rate_by_omega(records);
    double weighted = 0.0;
    int total = 0;
    for (const OmegaRate& r : rates) {
        weighted += r.rate * r.trials;
        total += r.trials;
    }
    CHECK(total == 100);
    CHECK(weighted / total == doctest::Approx(success_rate(records)).epsilon(1e-12));

    CHECK(success_rate(synthetic_records(7, 7)) == 1.0);
    CHECK_THROWS_AS(success_rate({}), OutOfRangeError);
    CHECK_THROWS_AS(success_rate_by_omega({}), OutOfRangeError);
}

TEST_CASE("success indicators group by starting angle in order") {
    const std::vector<TrialRecord> records = synthetic_records(10, 4);
    const std::vector<std::vector<double>> groups = success_groups_by_omega(records);
    REQUIRE(groups.size() == 5);
    for (const auto& g : groups) CHECK(g.size() == 2);
    // Trials 0..3 succeeded; they landed in groups 0..3 first slot.
    CHECK(groups[0] == std::vector<double>{1.0, 0.0});
    CHECK(groups[3] == std::vector<double>{1.0, 0.0});
    CHECK(groups[4] == std::vector<double>{0.0, 0.0});
}

TEST_CASE("json persistence round-trips losslessly") {
    HarnessConfig cfg;
    cfg.experiment.trials_per_omega = 4;
    const std::vector<TrialRecord> records = run_experiment(cfg, 9, cheap_bundle());
    const std::string text = records_to_json(records);

    // The contact block appears exactly on success.
    const nlohmann::json doc = nlohmann::json::parse(text);
    REQUIRE(doc.at("records").size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(doc.at("records").at(i).contains("contact") == records[i].outcome.success);

    const std::vector<TrialRecord> back = records_from_json(text);
    REQUIRE(back.size() == records.size());
    CHECK(records_to_json(back) == text);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].trial_id == records[i].trial_id);
        CHECK(back[i].seed == records[i].seed);
        CHECK(back[i].outcome.success == records[i].outcome.success);
        CHECK(back[i].outcome.sim_time_s == records[i].outcome.sim_time_s);
        CHECK(back[i].outcome.final_target_delta_frame.x ==
              records[i].outcome.final_target_delta_frame.x);
        CHECK(back[i].predicted_angular == records[i].predicted_angular);
        CHECK(back[i].gate == records[i].gate);
    }

    const std::string path = temp_path("records.json");
    save_records_json(records, path);
    CHECK(records_to_json(load_records_json(path)) == text);
    std::remove(path.c_str());

    // Empty set still writes a valid document.
    CHECK(records_from_json(records_to_json({})).empty());
}

TEST_CASE("csv persistence round-trips losslessly") {
    HarnessConfig cfg;
    cfg.experiment.trials_per_omega = 4;
    const std::vector<TrialRecord> records = run_experiment(cfg, 13, cheap_bundle());
    const std::string text = records_to_csv(records);

    std::size_t lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == records.size() + 1);

    const std::vector<TrialRecord> back = records_from_csv(text);
    REQUIRE(back.size() == records.size());
    CHECK(records_to_csv(back) == text);
    CHECK(records_to_json(back) == records_to_json(records));

    const std::string path = temp_path("records.csv");
    save_records_csv(records, path);
    CHECK(records_to_csv(load_records_csv(path)) == text);
    std::remove(path.c_str());

    // Empty set keeps the header.
    const std::string empty = records_to_csv({});
    CHECK(empty.find("trial_id,omega_deg") == 0);
    CHECK(records_from_csv(empty).empty());
}

TEST_CASE("loaders reject malformed documents") {
    CHECK_THROWS_AS(records_from_json("nonsense"), IoError);
    CHECK_THROWS_AS(records_from_json("{}"), IoError);
    CHECK_THROWS_AS(records_from_json(R"({"format_version": 2, "records": []})"),
                    IoError);
    // A failed trial must not carry a contact block.
    CHECK_THROWS_AS(records_from_json(R"({"format_version": 1, "records": [{
        "trial_id": 0, "omega_deg": 0, "range_cm": 25, "seed": 1,
        "success": false, "reason": "not_in_view", "steps": 4, "sim_time_s": 4.0,
        "target_delta_cm": [0, 0, 0],
        "contact": {"phi_deg": 0, "dx_mm": 0, "dy_mm": 0, "pred_angular": 0,
                    "pred_vertical": 0, "pred_horizontal": 0, "gate": "charge"}}]})"),
                    IoError);
    CHECK_THROWS_AS(records_from_json(R"({"format_version": 1, "records": [{
        "trial_id": 0, "omega_deg": 0, "range_cm": 25, "seed": 1,
        "success": false, "reason": "walked_away", "steps": 4, "sim_time_s": 4.0,
        "target_delta_cm": [0, 0, 0]}]})"),
                    IoError);

    CHECK_THROWS_AS(records_from_csv(""), IoError);
    CHECK_THROWS_AS(records_from_csv("wrong,header\n"), IoError);
    const std::string header = records_to_csv({});
    CHECK_THROWS_AS(records_from_csv(header + "1,2,3\n"), IoError);
    CHECK_THROWS_AS(
        records_from_csv(header +
                         "0,0,25,1,0,not_in_view,4,4,0,0,0,1,0,0,0,0,0,charge\n"),
        IoError);

    CHECK_THROWS_AS(load_records_json("/nonexistent/records.json"), IoError);
    CHECK_THROWS_AS(save_records_csv({}, "/nonexistent/dir/records.csv"), IoError);
}

TEST_CASE("bundle with mismatched kinds is rejected") {
    HarnessConfig cfg;
    cfg.experiment.trials_per_omega = 1;
    ClassifierBundle swapped = cheap_bundle();
    std::swap(swapped.angular, swapped.vertical);
    CHECK_THROWS_AS(run_experiment(cfg, 1, swapped), WrongKindError);
}
