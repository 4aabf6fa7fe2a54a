#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcsim/classifier.hpp"
#include "mcsim/config.hpp"
#include "mcsim/delta_kin.hpp"
#include "mcsim/detection.hpp"
#include "mcsim/errors.hpp"
#include "mcsim/experiment.hpp"
#include "mcsim/geometry.hpp"
#include "mcsim/stats.hpp"
#include "mcsim/tactile.hpp"
#include "mcsim/world.hpp"

namespace {

using mcsim::ConfigError;
using mcsim::IoError;
using nlohmann::json;
using nlohmann::ordered_json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open for writing: " + out_path);
    out << text;
    if (!out) throw IoError("write failed: " + out_path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool has_csv_extension(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

mcsim::DetectionEval parse_detection_input(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("detection input: invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("predictions") || !doc.contains("ground_truth"))
        throw IoError("detection input: need 'predictions' and 'ground_truth'");

    auto as_box = [](const json& b, const char* what) {
        if (!b.is_array() || b.size() != 4 || !b.at(0).is_number())
            throw IoError(std::string("detection input: ") + what +
                          " must be [x1, y1, x2, y2]");
        return mcsim::BBox{b.at(0).get<double>(), b.at(1).get<double>(),
                           b.at(2).get<double>(), b.at(3).get<double>()};
    };

    mcsim::DetectionEval eval;
    for (const json& p : doc.at("predictions")) {
        if (!p.is_object() || !p.contains("box") || !p.contains("confidence"))
            throw IoError("detection input: each prediction needs 'box' and 'confidence'");
        eval.predictions.push_back(
            {as_box(p.at("box"), "prediction box"), p.at("confidence").get<double>()});
    }
    for (const json& g : doc.at("ground_truth"))
        eval.ground_truth.push_back(as_box(g, "ground truth box"));
    if (doc.contains("iou_threshold"))
        eval.iou_threshold = doc.at("iou_threshold").get<double>();
    return eval;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mcsim: autonomous docking simulation toolkit"};
    app.fallthrough();
    app.require_subcommand(0, 1);

    std::string config_path;
    std::string out_path;
    std::string format = "json";
    std::uint64_t seed = 0;
    bool print_defaults = false;
    app.add_option("--config", config_path, "Configuration file (JSON)");
    app.add_option("--seed", seed, "Master seed for every derived random stream");
    app.add_option("--out", out_path, "Output file (default: stdout)");
    app.add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--print-default-config", print_defaults,
                 "Print the built-in default configuration and exit");

    auto load_cfg = [&config_path]() {
        if (config_path.empty()) return mcsim::default_config();
        try {
            return mcsim::load_config(config_path);
        } catch (const IoError& e) {
            throw ConfigError(e.what());
        }
    };

    // ik
    auto* ik_cmd = app.add_subcommand("ik", "Joint angles for an actuator-frame target");
    double ik_x = 0, ik_y = 0, ik_z = 0;
    ik_cmd->add_option("--x", ik_x, "Target x, cm")->required();
    ik_cmd->add_option("--y", ik_y, "Target y, cm")->required();
    ik_cmd->add_option("--z", ik_z, "Target z, cm")->required();
    ik_cmd->callback([&] {
        if (print_defaults) return;
        const mcsim::HarnessConfig cfg = load_cfg();
        const auto j = mcsim::inverse_kinematics(cfg.delta_geometry, {ik_x, ik_y, ik_z});
        if (format == "csv") {
            std::string text = "reachable,theta1_deg,theta2_deg,theta3_deg\n";
            if (j)
                text += "1," + fmt_double(j->theta1_deg) + "," +
                        fmt_double(j->theta2_deg) + "," + fmt_double(j->theta3_deg) + "\n";
            else
                text += "0,,,\n";
            emit(text, out_path);
            return;
        }
        ordered_json doc;
        doc["target_cm"] = {ik_x, ik_y, ik_z};
        doc["reachable"] = j.has_value();
        if (j)
            doc["joint_angles_deg"] = {j->theta1_deg, j->theta2_deg, j->theta3_deg};
        emit(dump(doc), out_path);
    });

    // fk
    auto* fk_cmd = app.add_subcommand("fk", "Platform position for joint angles");
    double fk_t1 = 0, fk_t2 = 0, fk_t3 = 0;
    fk_cmd->add_option("--t1", fk_t1, "Joint 1 angle, degrees")->required();
    fk_cmd->add_option("--t2", fk_t2, "Joint 2 angle, degrees")->required();
    fk_cmd->add_option("--t3", fk_t3, "Joint 3 angle, degrees")->required();
    fk_cmd->callback([&] {
        if (print_defaults) return;
        const mcsim::HarnessConfig cfg = load_cfg();
        const auto p =
            mcsim::forward_kinematics(cfg.delta_geometry, {fk_t1, fk_t2, fk_t3});
        if (format == "csv") {
            std::string text = "valid,x_cm,y_cm,z_cm\n";
            if (p)
                text += "1," + fmt_double(p->x) + "," + fmt_double(p->y) + "," +
                        fmt_double(p->z) + "\n";
            else
                text += "0,,,\n";
            emit(text, out_path);
            return;
        }
        ordered_json doc;
        doc["joint_angles_deg"] = {fk_t1, fk_t2, fk_t3};
        doc["valid"] = p.has_value();
        if (p) doc["position_cm"] = {p->x, p->y, p->z};
        emit(dump(doc), out_path);
    });

    // transform
    auto* tr_cmd =
        app.add_subcommand("transform", "Map a point between camera and actuator frames");
    double tr_x = 0, tr_y = 0, tr_z = 0;
    double tr_theta = mcsim::kCameraPitchDegDefault;
    double tr_offset = mcsim::kCameraYOffsetCmDefault;
    bool tr_inverse = false;
    tr_cmd->add_option("--x", tr_x, "Input x, cm")->required();
    tr_cmd->add_option("--y", tr_y, "Input y, cm")->required();
    tr_cmd->add_option("--z", tr_z, "Input z, cm")->required();
    tr_cmd->add_option("--theta", tr_theta, "Camera pitch, degrees");
    tr_cmd->add_option("--offset", tr_offset, "Camera-to-actuator Y offset, cm");
    tr_cmd->add_flag("--inverse", tr_inverse, "Map actuator frame back to camera frame");
    tr_cmd->callback([&] {
        if (print_defaults) return;
        const mcsim::Vec3 in{tr_x, tr_y, tr_z};
        const mcsim::Vec3 out = tr_inverse
                                    ? mcsim::delta_to_camera(in, tr_theta, tr_offset)
                                    : mcsim::camera_to_delta(in, tr_theta, tr_offset);
        if (format == "csv") {
            emit("x_cm,y_cm,z_cm\n" + fmt_double(out.x) + "," + fmt_double(out.y) +
                     "," + fmt_double(out.z) + "\n",
                 out_path);
            return;
        }
        ordered_json doc;
        doc["direction"] = tr_inverse ? "delta_to_camera" : "camera_to_delta";
        doc["theta_deg"] = tr_theta;
        doc["offset_cm"] = tr_offset;
        doc["input_cm"] = {in.x, in.y, in.z};
        doc["output_cm"] = {out.x, out.y, out.z};
        emit(dump(doc), out_path);
    });

    // synth-tactile
    auto* synth_cmd =
        app.add_subcommand("synth-tactile", "Generate a labeled synthetic tactile dataset");
    std::string synth_kind;
    synth_cmd->add_option("--kind", synth_kind, "Misalignment axis")
        ->required()
        ->check(CLI::IsMember({"angular", "vertical", "horizontal"}));
    synth_cmd->callback([&] {
        if (print_defaults) return;
        if (out_path.empty())
            throw ConfigError("synth-tactile: --out is required (dataset path)");
        const mcsim::HarnessConfig cfg = load_cfg();
        const mcsim::TactileDataset dataset = mcsim::generate_dataset(
            mcsim::misalignment_kind_from_string(synth_kind), cfg.tactile.n_per_class,
            cfg.tactile.noise_sigma_n, seed);
        if (format == "csv")
            mcsim::save_tactile_csv(dataset, out_path);
        else
            mcsim::save_tactile_json(dataset, out_path);
        std::cerr << "synth-tactile: wrote " << dataset.size() << " frames to "
                  << out_path << "\n";
    });

    // train-classifier
    auto* train_cmd =
        app.add_subcommand("train-classifier", "Train one per-axis contact classifier");
    std::string train_kind;
    std::string train_data;
    train_cmd->add_option("--kind", train_kind, "Misalignment axis")
        ->required()
        ->check(CLI::IsMember({"angular", "vertical", "horizontal"}));
    train_cmd->add_option("--data", train_data,
                          "Tactile dataset file (default: generate per config)");
    train_cmd->callback([&] {
        if (print_defaults) return;
        if (out_path.empty())
            throw ConfigError("train-classifier: --out is required (model path)");
        const mcsim::HarnessConfig cfg = load_cfg();
        const mcsim::MisalignmentKind kind =
            mcsim::misalignment_kind_from_string(train_kind);

        mcsim::TrainReport report;
        mcsim::CnnModel model;
        if (train_data.empty()) {
            model = mcsim::train_axis_model(cfg, kind, seed, &report);
        } else {
            const mcsim::TactileDataset dataset =
                has_csv_extension(train_data)
                    ? mcsim::load_tactile_csv(train_data, seed)
                    : mcsim::load_tactile_json(train_data);
            mcsim::TrainConfig tc = cfg.train;
            tc.seed = seed;
            model = mcsim::train(dataset, tc, &report);
        }
        mcsim::save_model_json(model, out_path);

        ordered_json doc;
        doc["kind"] = mcsim::to_string(model.kind);
        doc["epochs"] = static_cast<int>(report.train_loss.size());
        doc["best_epoch"] = report.best_epoch;
        doc["best_val_accuracy"] = report.best_val_accuracy;
        doc["final_train_loss"] =
            report.train_loss.empty() ? 0.0 : report.train_loss.back();
        doc["model_path"] = out_path;
        std::cout << dump(doc);
    });

    // classify
    auto* classify_cmd =
        app.add_subcommand("classify", "Classify every frame of a tactile dataset");
    std::string classify_model;
    std::string classify_data;
    classify_cmd->add_option("--model", classify_model, "Model file (JSON)")->required();
    classify_cmd->add_option("--data", classify_data, "Tactile dataset file")->required();
    classify_cmd->callback([&] {
        if (print_defaults) return;
        const mcsim::CnnModel model = mcsim::load_model_json(classify_model);
        const mcsim::TactileDataset dataset =
            has_csv_extension(classify_data) ? mcsim::load_tactile_csv(classify_data, seed)
                                             : mcsim::load_tactile_json(classify_data);
        std::size_t correct = 0;
        std::vector<int> predicted(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            const mcsim::MisalignmentLabel p = mcsim::classify(model, dataset.frames[i]);
            predicted[i] = p.class_index;
            if (dataset.kind == model.kind && p == dataset.labels[i]) ++correct;
        }
        if (format == "csv") {
            std::string text = "index,label,predicted\n";
            for (std::size_t i = 0; i < dataset.size(); ++i)
                text += std::to_string(i) + "," +
                        std::to_string(dataset.labels[i].class_index) + "," +
                        std::to_string(predicted[i]) + "\n";
            emit(text, out_path);
            return;
        }
        ordered_json doc;
        doc["model_kind"] = mcsim::to_string(model.kind);
        doc["data_kind"] = mcsim::to_string(dataset.kind);
        doc["n_frames"] = dataset.size();
        doc["accuracy"] = dataset.size() == 0 || dataset.kind != model.kind
                              ? 0.0
                              : static_cast<double>(correct) /
                                    static_cast<double>(dataset.size());
        doc["predicted"] = predicted;
        emit(dump(doc), out_path);
    });

    // simulate
    auto* sim_cmd =
        app.add_subcommand("simulate", "Run the Monte-Carlo docking experiment");
    sim_cmd->callback([&] {
        if (print_defaults) return;
        const mcsim::HarnessConfig cfg = load_cfg();
        const std::vector<mcsim::TrialRecord> records = mcsim::run_experiment(cfg, seed);
        emit(format == "csv" ? mcsim::records_to_csv(records)
                             : mcsim::records_to_json(records),
             out_path);
        int charge = 0, graded = 0;
        for (const mcsim::TrialRecord& r : records)
            if (r.outcome.success) {
                ++graded;
                charge += r.gate == mcsim::GateDecision::Charge ? 1 : 0;
            }
        std::cerr << "simulate: " << records.size() << " trials, success rate "
                  << mcsim::success_rate(records) << ", gate charge " << charge << "/"
                  << graded << "\n";
    });

    // analyze
    auto* an_cmd =
        app.add_subcommand("analyze", "Summarize an exported trial-record file");
    std::string an_path;
    an_cmd->add_option("records", an_path, "Trial records file (JSON or CSV)")
        ->required();
    an_cmd->callback([&] {
        if (print_defaults) return;
        const std::vector<mcsim::TrialRecord> records =
            has_csv_extension(an_path) ? mcsim::load_records_csv(an_path)
                                       : mcsim::load_records_json(an_path);
        if (records.empty()) throw mcsim::OutOfRangeError("analyze: no records");
        const std::vector<mcsim::OmegaRate> rates = mcsim::success_rate_by_omega(records);

        if (format == "csv") {
            std::string text = "omega_deg,rate,trials\n";
            for (const mcsim::OmegaRate& r : rates)
                text += fmt_double(r.omega_deg) + "," + fmt_double(r.rate) + "," +
                        std::to_string(r.trials) + "\n";
            emit(text, out_path);
            return;
        }

        ordered_json doc;
        doc["n_trials"] = records.size();
        doc["success_rate"] = mcsim::success_rate(records);
        doc["per_omega"] = ordered_json::array();
        for (const mcsim::OmegaRate& r : rates)
            doc["per_omega"].push_back(ordered_json{
                {"omega_deg", r.omega_deg}, {"rate", r.rate}, {"trials", r.trials}});
        try {
            const mcsim::AnovaResult a =
                mcsim::one_way_anova(mcsim::success_groups_by_omega(records));
            doc["anova"] = ordered_json{{"f_statistic", a.f_statistic},
                                        {"df_between", a.df_between},
                                        {"df_within", a.df_within},
                                        {"p_value", a.p_value}};
        } catch (const mcsim::DegenerateInputError&) {
            doc["anova"] = nullptr;
            doc["anova_note"] = "all groups identical with zero variance";
        } catch (const mcsim::OutOfRangeError&) {
            doc["anova"] = nullptr;
            doc["anova_note"] = "need at least 2 groups with 2 trials each";
        }
        int charge = 0, graded = 0;
        for (const mcsim::TrialRecord& r : records)
            if (r.outcome.success) {
                ++graded;
                charge += r.gate == mcsim::GateDecision::Charge ? 1 : 0;
            }
        doc["gate"] = ordered_json{
            {"charge", charge}, {"abort", graded - charge}, {"graded", graded}};
        emit(dump(doc), out_path);
    });

    // eval-detection
    auto* det_cmd = app.add_subcommand(
        "eval-detection", "Average precision / precision / recall for detections");
    std::string det_path;
    double det_iou = 0.5;
    det_cmd->add_option("input", det_path, "Detections file (JSON)")->required();
    auto* det_iou_opt =
        det_cmd->add_option("--iou", det_iou, "IoU match threshold (default 0.5)");
    det_cmd->callback([&] {
        if (print_defaults) return;
        mcsim::DetectionEval eval = parse_detection_input(read_file(det_path));
        if (det_iou_opt->count() > 0) eval.iou_threshold = det_iou;
        const mcsim::DetectionMetrics m = mcsim::detection_metrics(eval);
        if (format == "csv") {
            emit("ap,precision,recall,true_positives,false_positives,false_negatives\n" +
                     fmt_double(m.ap) + "," + fmt_double(m.precision) + "," +
                     fmt_double(m.recall) + "," + std::to_string(m.true_positives) +
                     "," + std::to_string(m.false_positives) + "," +
                     std::to_string(m.false_negatives) + "\n",
                 out_path);
            return;
        }
        ordered_json doc;
        doc["iou_threshold"] = eval.iou_threshold;
        doc["ap"] = m.ap;
        doc["precision"] = m.precision;
        doc["recall"] = m.recall;
        doc["true_positives"] = m.true_positives;
        doc["false_positives"] = m.false_positives;
        doc["false_negatives"] = m.false_negatives;
        emit(dump(doc), out_path);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (print_defaults) {
        emit(mcsim::config_to_json(mcsim::default_config()), out_path);
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 1;
    }
    return 0;
}
