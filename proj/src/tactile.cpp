#include "mcsim/tactile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mcsim/errors.hpp"

namespace mcsim {

namespace {

constexpr int kBandTopRow = 4;  // nominal band occupies rows 4 and 5
constexpr int kBandRows = 2;
constexpr double kBaseForceN = 5.0;
// Slope chosen so a 5 degree tilt spans the full 1..9 N sensing range.
constexpr double kFullTiltSlopePerCol = 8.0 / 9.0;

std::uint64_t split_stream_seed(std::uint64_t seed, int class_index) {
    return derive_seed(seed, 0x53504C4954ull + static_cast<std::uint64_t>(class_index), 0);
}

std::uint64_t sample_stream_seed(std::uint64_t seed, int class_index, int i) {
    return derive_seed(seed, static_cast<std::uint64_t>(class_index),
                       static_cast<std::uint64_t>(i));
}

std::vector<bool> make_split(std::uint64_t seed, int classes, int n_per_class) {
    std::vector<bool> in_train(static_cast<std::size_t>(classes) * n_per_class, false);
    const int n_train = static_cast<int>(std::lround(kTrainFraction * n_per_class));
    for (int c = 0; c < classes; ++c) {
        std::vector<int> idx(static_cast<std::size_t>(n_per_class));
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(split_stream_seed(seed, c));
        rng.shuffle(idx);
        for (int k = 0; k < n_train && k < n_per_class; ++k)
            in_train[static_cast<std::size_t>(c) * n_per_class + idx[static_cast<std::size_t>(k)]] =
                true;
    }
    return in_train;
}

}  // namespace

const char* to_string(MisalignmentKind k) {
    switch (k) {
        case MisalignmentKind::Angular: return "angular";
        case MisalignmentKind::Vertical: return "vertical";
        case MisalignmentKind::Horizontal: return "horizontal";
    }
    return "angular";
}

MisalignmentKind misalignment_kind_from_string(const std::string& s) {
    if (s == "angular") return MisalignmentKind::Angular;
    if (s == "vertical") return MisalignmentKind::Vertical;
    if (s == "horizontal") return MisalignmentKind::Horizontal;
    throw OutOfRangeError("unknown misalignment kind: " + s);
}

int num_classes(MisalignmentKind k) {
    return k == MisalignmentKind::Angular ? 6 : 5;
}

double angular_class_phi_deg(int class_index) {
    if (class_index < 0 || class_index > 5)
        throw OutOfRangeError("angular class index out of range");
    return static_cast<double>(class_index);
}

double translational_class_offset_mm(int class_index) {
    if (class_index < 0 || class_index > 4)
        throw OutOfRangeError("translational class index out of range");
    return -10.0 + 5.0 * class_index;
}

MisalignmentParams params_for(const MisalignmentLabel& label) {
    MisalignmentParams p;
    switch (label.kind) {
        case MisalignmentKind::Angular:
            p.phi_deg = angular_class_phi_deg(label.class_index);
            break;
        case MisalignmentKind::Vertical:
            p.dy_mm = translational_class_offset_mm(label.class_index);
            break;
        case MisalignmentKind::Horizontal:
            p.dx_mm = translational_class_offset_mm(label.class_index);
            break;
    }
    return p;
}

double& TactileFrame::at(int ch, int r, int c) {
    if (ch < 0 || ch >= kTactileChannels || r < 0 || r >= kTactileRows || c < 0 ||
        c >= kTactileCols)
        throw OutOfRangeError("TactileFrame: taxel index out of range");
    return force_n[static_cast<std::size_t>((ch * kTactileRows + r) * kTactileCols + c)];
}

double TactileFrame::at(int ch, int r, int c) const {
    return const_cast<TactileFrame*>(this)->at(ch, r, c);
}

TactileFrame synthesize(double phi_deg, double dx_mm, double dy_mm, double noise_sigma_n,
                        Rng& rng) {
    if (!(phi_deg >= 0.0 && phi_deg <= 5.0))
        throw OutOfRangeError("synthesize: tilt angle outside [0, 5] degrees");
    if (!(std::abs(dx_mm) <= 10.0) || !(std::abs(dy_mm) <= 10.0))
        throw OutOfRangeError("synthesize: offset outside [-10, 10] mm");

    const int row_shift = static_cast<int>(std::round(dy_mm / kTaxelPitchMm));
    const int col_shift = static_cast<int>(std::round(dx_mm / kTaxelPitchMm));
    const double slope = kFullTiltSlopePerCol * (phi_deg / 5.0);

    TactileFrame f;
    for (int ch = 0; ch < kTactileChannels; ++ch) {
        const double sign = ch == 0 ? 1.0 : -1.0;
        for (int r = 0; r < kTactileRows; ++r) {
            // Positive dy lifts the contact band toward row 0.
            const int src_row = r + row_shift - kBandTopRow;
            const bool in_band = src_row >= 0 && src_row < kBandRows;
            for (int c = 0; c < kTactileCols; ++c) {
                const int src_col = c - col_shift;
                const bool in_support = src_col >= 0 && src_col < kTactileCols;
                if (in_band && in_support)
                    f.at(ch, r, c) = kBaseForceN + sign * slope * (c - 4.5);
            }
        }
    }

    for (double& v : f.force_n) {
        if (noise_sigma_n > 0.0) v += rng.gaussian(0.0, noise_sigma_n);
        v = std::clamp(v, 0.0, kForceCapN);
        if (v < kForceFloorN) v = 0.0;
    }
    return f;
}

TactileFrame synthesize(const MisalignmentLabel& label, double noise_sigma_n, Rng& rng) {
    const MisalignmentParams p = params_for(label);
    return synthesize(p.phi_deg, p.dx_mm, p.dy_mm, noise_sigma_n, rng);
}

TactileDataset generate_dataset(MisalignmentKind kind, int n_per_class,
                                double noise_sigma_n, std::uint64_t seed) {
    if (n_per_class < 1)
        throw OutOfRangeError("generate_dataset: need at least one sample per class");
    TactileDataset d;
    d.kind = kind;
    d.split_seed = seed;
    const int classes = num_classes(kind);
    d.frames.reserve(static_cast<std::size_t>(classes) * n_per_class);
    d.labels.reserve(d.frames.capacity());
    for (int c = 0; c < classes; ++c) {
        const MisalignmentLabel label{kind, c};
        for (int i = 0; i < n_per_class; ++i) {
            Rng rng(sample_stream_seed(seed, c, i));
            d.frames.push_back(synthesize(label, noise_sigma_n, rng));
            d.labels.push_back(label);
        }
    }
    d.in_train = make_split(seed, classes, n_per_class);
    return d;
}

void save_tactile_csv(const TactileDataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "kind,class";
    for (int i = 0; i < kTactileChannels * kTactileRows * kTactileCols; ++i)
        out << ",f" << i;
    out << "\n";
    char buf[64];
    for (std::size_t s = 0; s < d.size(); ++s) {
        out << to_string(d.labels[s].kind) << ',' << d.labels[s].class_index;
        for (double v : d.frames[s].force_n) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

TactileDataset load_tactile_csv(const std::string& path, std::uint64_t split_seed) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty tactile CSV: " + path);

    TactileDataset d;
    d.split_seed = split_seed;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ',')) throw IoError("malformed tactile CSV row");
        const MisalignmentKind kind = misalignment_kind_from_string(cell);
        if (first) {
            d.kind = kind;
            first = false;
        } else if (kind != d.kind) {
            throw IoError("tactile CSV mixes misalignment kinds");
        }
        if (!std::getline(ss, cell, ',')) throw IoError("malformed tactile CSV row");
        MisalignmentLabel label{kind, std::stoi(cell)};
        if (label.class_index < 0 || label.class_index >= num_classes(kind))
            throw IoError("tactile CSV class index out of range");
        TactileFrame f;
        for (double& v : f.force_n) {
            if (!std::getline(ss, cell, ',')) throw IoError("short tactile CSV row");
            v = std::stod(cell);
        }
        d.frames.push_back(f);
        d.labels.push_back(label);
    }
    if (d.size() == 0) throw IoError("tactile CSV has no samples: " + path);

    // Re-derive the split; requires the class-major balanced layout that
    // save_tactile_csv preserves.
    const int classes = num_classes(d.kind);
    if (d.size() % static_cast<std::size_t>(classes) != 0)
        throw IoError("tactile CSV is not class-balanced");
    const int n_per_class = static_cast<int>(d.size()) / classes;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < n_per_class; ++i)
            if (d.labels[static_cast<std::size_t>(c) * n_per_class + i].class_index != c)
                throw IoError("tactile CSV is not in class-major order");
    d.in_train = make_split(split_seed, classes, n_per_class);
    return d;
}

void save_tactile_json(const TactileDataset& d, const std::string& path) {
    nlohmann::ordered_json doc;
    doc["format_version"] = 1;
    doc["kind"] = to_string(d.kind);
    doc["split_seed"] = d.split_seed;
    nlohmann::ordered_json samples = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < d.size(); ++s) {
        nlohmann::ordered_json row;
        row["class"] = d.labels[s].class_index;
        row["in_train"] = static_cast<bool>(d.in_train[s]);
        row["force_n"] = d.frames[s].force_n;
        samples.push_back(std::move(row));
    }
    doc["samples"] = std::move(samples);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

TactileDataset load_tactile_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid tactile JSON: " + std::string(e.what()));
    }
    try {
        TactileDataset d;
        d.kind = misalignment_kind_from_string(doc.at("kind").get<std::string>());
        d.split_seed = doc.at("split_seed").get<std::uint64_t>();
        for (const auto& row : doc.at("samples")) {
            MisalignmentLabel label{d.kind, row.at("class").get<int>()};
            if (label.class_index < 0 || label.class_index >= num_classes(d.kind))
                throw IoError("tactile JSON class index out of range");
            TactileFrame f;
            const auto& arr = row.at("force_n");
            if (arr.size() != f.force_n.size())
                throw IoError("tactile JSON frame has wrong taxel count");
            for (std::size_t i = 0; i < f.force_n.size(); ++i)
                f.force_n[i] = arr[i].get<double>();
            d.frames.push_back(f);
            d.labels.push_back(label);
            d.in_train.push_back(row.at("in_train").get<bool>());
        }
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("tactile JSON missing fields: " + std::string(e.what()));
    }
}

} // namespace mcsim
