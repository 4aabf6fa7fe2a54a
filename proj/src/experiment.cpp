#include "mcsim/experiment.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcsim/errors.hpp"
#include "mcsim/rng.hpp"

namespace mcsim {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Seed-stream groups. Trial seeds use the starting-angle index as the group,
// so the auxiliary streams use constants far outside any plausible grid.
constexpr std::uint64_t kDatasetSeedGroup = 0xDA7A5E7ULL;
constexpr std::uint64_t kTrainSeedGroup = 0x7248A11ULL;
constexpr std::uint64_t kContactSeedGroup = 0xC08AC7ULL;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const json& require_key(const json& obj, const char* key, const char* ctx) {
    if (!obj.is_object() || !obj.contains(key))
        throw IoError(std::string("records: missing ") + ctx + "." + key);
    return obj.at(key);
}

double as_number(const json& v, const char* what) {
    if (!v.is_number()) throw IoError(std::string("records: ") + what + " must be a number");
    return v.get<double>();
}

int as_int(const json& v, const char* what) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw IoError(std::string("records: ") + what + " must be an integer");
    return v.get<int>();
}

std::uint64_t as_u64(const json& v, const char* what) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw IoError(std::string("records: ") + what + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string as_text(const json& v, const char* what) {
    if (!v.is_string()) throw IoError(std::string("records: ") + what + " must be a string");
    return v.get<std::string>();
}

int checked_class(int index, MisalignmentKind kind, const char* what) {
    if (index < 0 || index >= num_classes(kind))
        throw IoError(std::string("records: ") + what + " out of range");
    return index;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

constexpr const char* kCsvHeader =
    "trial_id,omega_deg,range_cm,seed,success,reason,steps,sim_time_s,"
    "target_x_cm,target_y_cm,target_z_cm,"
    "phi_deg,dx_mm,dy_mm,pred_angular,pred_vertical,pred_horizontal,gate";
constexpr int kCsvColumns = 18;

double parse_double(const std::string& s, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw IoError(std::string("records: bad ") + what + " value '" + s + "'");
    return v;
}

long long parse_int(const std::string& s, const char* what) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw IoError(std::string("records: bad ") + what + " value '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || s.find('-') != std::string::npos)
        throw IoError(std::string("records: bad ") + what + " value '" + s + "'");
    return v;
}

void write_file(const std::string& text, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

const char* to_string(SearchReason r) {
    switch (r) {
        case SearchReason::Reached: return "reached";
        case SearchReason::NotInView: return "not_in_view";
        case SearchReason::Unreachable: return "unreachable";
    }
    throw OutOfRangeError("invalid search reason");
}

SearchReason search_reason_from_string(const std::string& s) {
    if (s == "reached") return SearchReason::Reached;
    if (s == "not_in_view") return SearchReason::NotInView;
    if (s == "unreachable") return SearchReason::Unreachable;
    throw OutOfRangeError("unknown search reason: " + s);
}

const char* to_string(GateDecision g) {
    switch (g) {
        case GateDecision::Charge: return "charge";
        case GateDecision::Abort: return "abort";
    }
    throw OutOfRangeError("invalid gate decision");
}

GateDecision gate_from_string(const std::string& s) {
    if (s == "charge") return GateDecision::Charge;
    if (s == "abort") return GateDecision::Abort;
    throw OutOfRangeError("unknown gate decision: " + s);
}

CnnModel train_axis_model(const HarnessConfig& cfg, MisalignmentKind kind,
                          std::uint64_t master_seed, TrainReport* report) {
    cfg.validate();
    const std::uint64_t axis = static_cast<std::uint64_t>(kind);
    const TactileDataset dataset =
        generate_dataset(kind, cfg.tactile.n_per_class, cfg.tactile.noise_sigma_n,
                         derive_seed(master_seed, kDatasetSeedGroup, axis));
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(master_seed, kTrainSeedGroup, axis);
    return train(dataset, tc, report);
}

ClassifierBundle train_bundle(const HarnessConfig& cfg, std::uint64_t master_seed) {
    ClassifierBundle bundle;
    bundle.angular = train_axis_model(cfg, MisalignmentKind::Angular, master_seed);
    bundle.vertical = train_axis_model(cfg, MisalignmentKind::Vertical, master_seed);
    bundle.horizontal = train_axis_model(cfg, MisalignmentKind::Horizontal, master_seed);
    return bundle;
}

std::vector<TrialRecord> run_experiment(const HarnessConfig& cfg, std::uint64_t master_seed,
                                        const ClassifierBundle& models) {
    cfg.validate();
    if (models.angular.kind != MisalignmentKind::Angular ||
        models.vertical.kind != MisalignmentKind::Vertical ||
        models.horizontal.kind != MisalignmentKind::Horizontal)
        throw WrongKindError("run_experiment: bundle models must cover angular, "
                             "vertical, horizontal in order");

    std::vector<TrialRecord> records;
    records.reserve(cfg.experiment.omegas_deg.size() *
                    static_cast<std::size_t>(cfg.experiment.trials_per_omega));
    int trial_id = 0;
    for (std::size_t oi = 0; oi < cfg.experiment.omegas_deg.size(); ++oi) {
        const double omega = cfg.experiment.omegas_deg[oi];
        for (int t = 0; t < cfg.experiment.trials_per_omega; ++t) {
            const std::uint64_t seed = derive_seed(master_seed, oi, t);
            WorldState world = make_trial_world(omega, cfg.experiment.range_cm, seed);
            world.electrode_height_cm = cfg.world.electrode_height_cm;
            world.electrode_pos.z = cfg.world.electrode_height_cm;

            TrialRecord rec;
            rec.trial_id = trial_id++;
            rec.omega_deg = omega;
            rec.range_cm = cfg.experiment.range_cm;
            rec.seed = seed;
            rec.outcome = run_search(world, cfg.detector, seed, cfg.search_timing,
                                     cfg.delta_geometry);

            if (rec.outcome.success) {
                Rng contact(derive_seed(seed, kContactSeedGroup, 0));
                const MisalignmentLabel true_angular{
                    MisalignmentKind::Angular,
                    static_cast<int>(contact.uniform_index(
                        num_classes(MisalignmentKind::Angular)))};
                const MisalignmentLabel true_vertical{
                    MisalignmentKind::Vertical,
                    static_cast<int>(contact.uniform_index(
                        num_classes(MisalignmentKind::Vertical)))};
                const MisalignmentLabel true_horizontal{
                    MisalignmentKind::Horizontal,
                    static_cast<int>(contact.uniform_index(
                        num_classes(MisalignmentKind::Horizontal)))};
                rec.misalignment_true.phi_deg = params_for(true_angular).phi_deg;
                rec.misalignment_true.dx_mm = params_for(true_horizontal).dx_mm;
                rec.misalignment_true.dy_mm = params_for(true_vertical).dy_mm;

                // Each axis is sensed through its own contact frame so every
                // reading is in-distribution for the model that grades it.
                const double sigma = cfg.tactile.noise_sigma_n;
                const TactileFrame frame_a = synthesize(true_angular, sigma, contact);
                const TactileFrame frame_v = synthesize(true_vertical, sigma, contact);
                const TactileFrame frame_h = synthesize(true_horizontal, sigma, contact);
                rec.predicted_angular = classify(models.angular, frame_a);
                rec.predicted_vertical = classify(models.vertical, frame_v);
                rec.predicted_horizontal = classify(models.horizontal, frame_h);
                rec.gate = safety_gate(rec.predicted_angular,
                                       cfg.experiment.critical_angle_deg);
            }
            records.push_back(rec);
        }
    }
    return records;
}

std::vector<TrialRecord> run_experiment(const HarnessConfig& cfg,
                                        std::uint64_t master_seed) {
    return run_experiment(cfg, master_seed, train_bundle(cfg, master_seed));
}

double success_rate(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw OutOfRangeError("success_rate: no records");
    std::size_t hits = 0;
    for (const TrialRecord& r : records) hits += r.outcome.success ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::vector<OmegaRate> success_rate_by_omega(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw OutOfRangeError("success_rate_by_omega: no records");
    std::vector<OmegaRate> rates;
    std::vector<int> hits;
    for (const TrialRecord& r : records) {
        std::size_t slot = rates.size();
        for (std::size_t i = 0; i < rates.size(); ++i)
            if (rates[i].omega_deg == r.omega_deg) { slot = i; break; }
        if (slot == rates.size()) {
            rates.push_back({r.omega_deg, 0.0, 0});
            hits.push_back(0);
        }
        rates[slot].trials += 1;
        hits[slot] += r.outcome.success ? 1 : 0;
    }
    for (std::size_t i = 0; i < rates.size(); ++i)
        rates[i].rate = static_cast<double>(hits[i]) / rates[i].trials;
    return rates;
}

std::vector<std::vector<double>> success_groups_by_omega(
    const std::vector<TrialRecord>& records) {
    std::vector<double> omegas;
    std::vector<std::vector<double>> groups;
    for (const TrialRecord& r : records) {
        std::size_t slot = omegas.size();
        for (std::size_t i = 0; i < omegas.size(); ++i)
            if (omegas[i] == r.omega_deg) { slot = i; break; }
        if (slot == omegas.size()) {
            omegas.push_back(r.omega_deg);
            groups.emplace_back();
        }
        groups[slot].push_back(r.outcome.success ? 1.0 : 0.0);
    }
    return groups;
}

std::string records_to_json(const std::vector<TrialRecord>& records) {
    ordered_json doc;
    doc["format_version"] = 1;
    doc["records"] = ordered_json::array();
    for (const TrialRecord& r : records) {
        ordered_json rec;
        rec["trial_id"] = r.trial_id;
        rec["omega_deg"] = r.omega_deg;
        rec["range_cm"] = r.range_cm;
        rec["seed"] = r.seed;
        rec["success"] = r.outcome.success;
        rec["reason"] = to_string(r.outcome.reason);
        rec["steps"] = r.outcome.steps;
        rec["sim_time_s"] = r.outcome.sim_time_s;
        rec["target_delta_cm"] = {r.outcome.final_target_delta_frame.x,
                                  r.outcome.final_target_delta_frame.y,
                                  r.outcome.final_target_delta_frame.z};
        if (r.outcome.success) {
            rec["contact"] = ordered_json{
                {"phi_deg", r.misalignment_true.phi_deg},
                {"dx_mm", r.misalignment_true.dx_mm},
                {"dy_mm", r.misalignment_true.dy_mm},
                {"pred_angular", r.predicted_angular.class_index},
                {"pred_vertical", r.predicted_vertical.class_index},
                {"pred_horizontal", r.predicted_horizontal.class_index},
                {"gate", to_string(r.gate)},
            };
        }
        doc["records"].push_back(std::move(rec));
    }
    return doc.dump(2) + "\n";
}

std::vector<TrialRecord> records_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("records: invalid JSON: ") + e.what());
    }
    if (as_int(require_key(doc, "format_version", "document"), "format_version") != 1)
        throw IoError("records: unsupported format_version");
    const json& arr = require_key(doc, "records", "document");
    if (!arr.is_array()) throw IoError("records: 'records' must be an array");

    std::vector<TrialRecord> records;
    records.reserve(arr.size());
    for (const json& rec : arr) {
        TrialRecord r;
        r.trial_id = as_int(require_key(rec, "trial_id", "record"), "trial_id");
        r.omega_deg = as_number(require_key(rec, "omega_deg", "record"), "omega_deg");
        r.range_cm = as_number(require_key(rec, "range_cm", "record"), "range_cm");
        r.seed = as_u64(require_key(rec, "seed", "record"), "seed");
        const json& success = require_key(rec, "success", "record");
        if (!success.is_boolean()) throw IoError("records: success must be a boolean");
        r.outcome.success = success.get<bool>();
        try {
            r.outcome.reason = search_reason_from_string(
                as_text(require_key(rec, "reason", "record"), "reason"));
        } catch (const OutOfRangeError& e) {
            throw IoError(std::string("records: ") + e.what());
        }
        r.outcome.steps = as_int(require_key(rec, "steps", "record"), "steps");
        r.outcome.sim_time_s =
            as_number(require_key(rec, "sim_time_s", "record"), "sim_time_s");
        const json& target = require_key(rec, "target_delta_cm", "record");
        if (!target.is_array() || target.size() != 3)
            throw IoError("records: target_delta_cm must be a 3-element array");
        r.outcome.final_target_delta_frame.x = as_number(target.at(0), "target_delta_cm[0]");
        r.outcome.final_target_delta_frame.y = as_number(target.at(1), "target_delta_cm[1]");
        r.outcome.final_target_delta_frame.z = as_number(target.at(2), "target_delta_cm[2]");

        if (r.outcome.success != rec.contains("contact"))
            throw IoError("records: contact block must be present exactly on success");
        if (r.outcome.success) {
            const json& c = rec.at("contact");
            r.misalignment_true.phi_deg =
                as_number(require_key(c, "phi_deg", "contact"), "phi_deg");
            r.misalignment_true.dx_mm =
                as_number(require_key(c, "dx_mm", "contact"), "dx_mm");
            r.misalignment_true.dy_mm =
                as_number(require_key(c, "dy_mm", "contact"), "dy_mm");
            r.predicted_angular = {
                MisalignmentKind::Angular,
                checked_class(as_int(require_key(c, "pred_angular", "contact"),
                                     "pred_angular"),
                              MisalignmentKind::Angular, "pred_angular")};
            r.predicted_vertical = {
                MisalignmentKind::Vertical,
                checked_class(as_int(require_key(c, "pred_vertical", "contact"),
                                     "pred_vertical"),
                              MisalignmentKind::Vertical, "pred_vertical")};
            r.predicted_horizontal = {
                MisalignmentKind::Horizontal,
                checked_class(as_int(require_key(c, "pred_horizontal", "contact"),
                                     "pred_horizontal"),
                              MisalignmentKind::Horizontal, "pred_horizontal")};
            try {
                r.gate = gate_from_string(
                    as_text(require_key(c, "gate", "contact"), "gate"));
            } catch (const OutOfRangeError& e) {
                throw IoError(std::string("records: ") + e.what());
            }
        }
        records.push_back(r);
    }
    return records;
}

void save_records_json(const std::vector<TrialRecord>& records, const std::string& path) {
    write_file(records_to_json(records), path);
}

std::vector<TrialRecord> load_records_json(const std::string& path) {
    return records_from_json(read_file(path));
}

std::string records_to_csv(const std::vector<TrialRecord>& records) {
    std::string out = kCsvHeader;
    out += '\n';
    char u64buf[24];
    for (const TrialRecord& r : records) {
        std::snprintf(u64buf, sizeof(u64buf), "%" PRIu64, r.seed);
        out += std::to_string(r.trial_id);
        out += ',';
        out += fmt_double(r.omega_deg);
        out += ',';
        out += fmt_double(r.range_cm);
        out += ',';
        out += u64buf;
        out += ',';
        out += r.outcome.success ? '1' : '0';
        out += ',';
        out += to_string(r.outcome.reason);
        out += ',';
        out += std::to_string(r.outcome.steps);
        out += ',';
        out += fmt_double(r.outcome.sim_time_s);
        out += ',';
        out += fmt_double(r.outcome.final_target_delta_frame.x);
        out += ',';
        out += fmt_double(r.outcome.final_target_delta_frame.y);
        out += ',';
        out += fmt_double(r.outcome.final_target_delta_frame.z);
        out += ',';
        if (r.outcome.success) {
            out += fmt_double(r.misalignment_true.phi_deg);
            out += ',';
            out += fmt_double(r.misalignment_true.dx_mm);
            out += ',';
            out += fmt_double(r.misalignment_true.dy_mm);
            out += ',';
            out += std::to_string(r.predicted_angular.class_index);
            out += ',';
            out += std::to_string(r.predicted_vertical.class_index);
            out += ',';
            out += std::to_string(r.predicted_horizontal.class_index);
            out += ',';
            out += to_string(r.gate);
        } else {
            out += ",,,,,,";
        }
        out += '\n';
    }
    return out;
}

std::vector<TrialRecord> records_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("records: empty CSV document");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw IoError("records: unexpected CSV header");

    std::vector<TrialRecord> records;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (static_cast<int>(f.size()) != kCsvColumns)
            throw IoError("records: expected " + std::to_string(kCsvColumns) +
                          " CSV columns, got " + std::to_string(f.size()));
        TrialRecord r;
        r.trial_id = static_cast<int>(parse_int(f[0], "trial_id"));
        r.omega_deg = parse_double(f[1], "omega_deg");
        r.range_cm = parse_double(f[2], "range_cm");
        r.seed = parse_u64(f[3], "seed");
        if (f[4] != "0" && f[4] != "1")
            throw IoError("records: bad success value '" + f[4] + "'");
        r.outcome.success = f[4] == "1";
        try {
            r.outcome.reason = search_reason_from_string(f[5]);
        } catch (const OutOfRangeError& e) {
            throw IoError(std::string("records: ") + e.what());
        }
        r.outcome.steps = static_cast<int>(parse_int(f[6], "steps"));
        r.outcome.sim_time_s = parse_double(f[7], "sim_time_s");
        r.outcome.final_target_delta_frame.x = parse_double(f[8], "target_x_cm");
        r.outcome.final_target_delta_frame.y = parse_double(f[9], "target_y_cm");
        r.outcome.final_target_delta_frame.z = parse_double(f[10], "target_z_cm");

        const bool have_contact = !f[11].empty() || !f[12].empty() || !f[13].empty() ||
                                  !f[14].empty() || !f[15].empty() || !f[16].empty() ||
                                  !f[17].empty();
        if (r.outcome.success != have_contact)
            throw IoError("records: contact columns must be filled exactly on success");
        if (r.outcome.success) {
            r.misalignment_true.phi_deg = parse_double(f[11], "phi_deg");
            r.misalignment_true.dx_mm = parse_double(f[12], "dx_mm");
            r.misalignment_true.dy_mm = parse_double(f[13], "dy_mm");
            r.predicted_angular = {
                MisalignmentKind::Angular,
                checked_class(static_cast<int>(parse_int(f[14], "pred_angular")),
                              MisalignmentKind::Angular, "pred_angular")};
            r.predicted_vertical = {
                MisalignmentKind::Vertical,
                checked_class(static_cast<int>(parse_int(f[15], "pred_vertical")),
                              MisalignmentKind::Vertical, "pred_vertical")};
            r.predicted_horizontal = {
                MisalignmentKind::Horizontal,
                checked_class(static_cast<int>(parse_int(f[16], "pred_horizontal")),
                              MisalignmentKind::Horizontal, "pred_horizontal")};
            try {
                r.gate = gate_from_string(f[17]);
            } catch (const OutOfRangeError& e) {
                throw IoError(std::string("records: ") + e.what());
            }
        }
        records.push_back(r);
    }
    return records;
}

void save_records_csv(const std::vector<TrialRecord>& records, const std::string& path) {
    write_file(records_to_csv(records), path);
}

std::vector<TrialRecord> load_records_csv(const std::string& path) {
    return records_from_csv(read_file(path));
}

} // namespace mcsim
