#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "mcsim/errors.hpp"
#include "mcsim/tactile.hpp"

using namespace mcsim;

namespace {

TactileFrame clean(double phi, double dx, double dy) {
    Rng rng(1);
    return synthesize(phi, dx, dy, 0.0, rng);
}

}  // namespace

TEST_CASE("nominal contact: a symmetric five newton band on both channels") {
    TactileFrame f = clean(0, 0, 0);
    for (int ch = 0; ch < 2; ++ch)
        for (int r = 0; r < 10; ++r)
            for (int c = 0; c < 10; ++c) {
                const double want = (r == 4 || r == 5) ? 5.0 : 0.0;
                CHECK(f.at(ch, r, c) == want);
                CHECK(f.at(ch, r, c) == f.at(ch, r, 9 - c));  // mirror symmetric
                CHECK(f.at(0, r, c) == f.at(1, r, c));        // channels identical
            }
}

TEST_CASE("full tilt grades channel 0 up and channel 1 down across columns") {
    TactileFrame f = clean(5, 0, 0);
    for (int c = 0; c < 9; ++c) {
        CHECK(f.at(0, 4, c) < f.at(0, 4, c + 1));
        CHECK(f.at(1, 4, c) > f.at(1, 4, c + 1));
    }
    CHECK(f.at(0, 4, 0) == doctest::Approx(1.0));  // spans the sensing range
    CHECK(f.at(0, 4, 9) == doctest::Approx(9.0));
    CHECK(f.at(1, 4, 0) == doctest::Approx(9.0));
    CHECK(f.at(1, 4, 9) == doctest::Approx(1.0));
}

TEST_CASE("vertical offset lifts the band by the taxel-quantized row count") {
    TactileFrame up = clean(0, 0, 10);  // 10/2.41 rounds to 4 rows
    for (int c = 0; c < 10; ++c) {
        CHECK(up.at(0, 0, c) == 5.0);
        CHECK(up.at(0, 1, c) == 5.0);
        CHECK(up.at(0, 4, c) == 0.0);
        CHECK(up.at(0, 5, c) == 0.0);
    }
    TactileFrame down = clean(0, 0, -10);
    for (int c = 0; c < 10; ++c) {
        CHECK(down.at(0, 8, c) == 5.0);
        CHECK(down.at(0, 9, c) == 5.0);
        CHECK(down.at(0, 4, c) == 0.0);
    }
    TactileFrame half = clean(0, 0, 5);  // 5/2.41 rounds to 2 rows
    for (int c = 0; c < 10; ++c) {
        CHECK(half.at(0, 2, c) == 5.0);
        CHECK(half.at(0, 3, c) == 5.0);
        CHECK(half.at(0, 4, c) == 0.0);
    }
}

TEST_CASE("horizontal offset slides the contact columns") {
    TactileFrame right = clean(0, 5, 0);  // 5/2.41 rounds to 2 columns
    for (int r : {4, 5}) {
        CHECK(right.at(0, r, 0) == 0.0);
        CHECK(right.at(0, r, 1) == 0.0);
        for (int c = 2; c < 10; ++c) CHECK(right.at(0, r, c) == 5.0);
    }
    TactileFrame left = clean(0, -10, 0);  // 4 columns
    for (int r : {4, 5}) {
        for (int c = 0; c <= 5; ++c) CHECK(left.at(0, r, c) == 5.0);
        for (int c = 6; c < 10; ++c) CHECK(left.at(0, r, c) == 0.0);
    }
}

TEST_CASE("channel 1 is the column mirror of channel 0 for any tilt") {
    for (int phi = 0; phi <= 5; ++phi) {
        TactileFrame f = clean(phi, 0, 0);
        for (int r = 0; r < 10; ++r)
            for (int c = 0; c < 10; ++c)
                CHECK(f.at(0, r, c) == doctest::Approx(f.at(1, r, 9 - c)).epsilon(1e-12));
    }
}

TEST_CASE("noisy frames always respect the sensing range") {
    Rng rng(77);
    for (int i = 0; i < 50; ++i) {
        TactileFrame f = synthesize(3.0, 5.0, -5.0, 3.0, rng);
        for (double v : f.force_n) {
            CHECK(v >= 0.0);
            CHECK(v <= 9.0);
            CHECK((v == 0.0 || v >= 1.0));
        }
    }
}

TEST_CASE("noiseless classes are separated by at least 0.8 N somewhere") {
    for (MisalignmentKind kind :
         {MisalignmentKind::Angular, MisalignmentKind::Vertical, MisalignmentKind::Horizontal}) {
        const int n = num_classes(kind);
        std::vector<TactileFrame> frames;
        for (int c = 0; c < n; ++c) {
            Rng rng(1);
            frames.push_back(synthesize(MisalignmentLabel{kind, c}, 0.0, rng));
        }
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                double worst = 0.0;
                for (std::size_t i = 0; i < frames[a].force_n.size(); ++i)
                    worst = std::max(worst,
                                     std::abs(frames[a].force_n[i] - frames[b].force_n[i]));
                CHECK_MESSAGE(worst >= 0.8 - 1e-12, "kind ", static_cast<int>(kind),
                              " classes ", a, " vs ", b);
            }
    }
}

TEST_CASE("label helpers map classes to physical misalignment") {
    CHECK(params_for({MisalignmentKind::Angular, 3}).phi_deg == 3.0);
    CHECK(params_for({MisalignmentKind::Vertical, 0}).dy_mm == -10.0);
    CHECK(params_for({MisalignmentKind::Vertical, 2}).dy_mm == 0.0);
    CHECK(params_for({MisalignmentKind::Horizontal, 4}).dx_mm == 10.0);
    CHECK(num_classes(MisalignmentKind::Angular) == 6);
    CHECK(num_classes(MisalignmentKind::Horizontal) == 5);
    CHECK(misalignment_kind_from_string("vertical") == MisalignmentKind::Vertical);
    CHECK(to_string(MisalignmentKind::Horizontal) == std::string("horizontal"));
    CHECK_THROWS_AS(misalignment_kind_from_string("diagonal"), OutOfRangeError);
}

TEST_CASE("synthesize rejects out-of-model misalignment") {
    Rng rng(1);
    CHECK_THROWS_AS(synthesize(5.5, 0, 0, 0, rng), OutOfRangeError);
    CHECK_THROWS_AS(synthesize(-0.5, 0, 0, 0, rng), OutOfRangeError);
    CHECK_THROWS_AS(synthesize(0, 11, 0, 0, rng), OutOfRangeError);
    CHECK_THROWS_AS(synthesize(0, 0, -10.5, 0, rng), OutOfRangeError);
}

TEST_CASE("dataset defaults: 600 angular and 500 translational samples") {
    TactileDataset ang = generate_dataset(MisalignmentKind::Angular, 100, 0.4, 7);
    CHECK(ang.size() == 600);
    TactileDataset ver = generate_dataset(MisalignmentKind::Vertical, 100, 0.4, 7);
    CHECK(ver.size() == 500);

    std::vector<int> counts(6, 0), train_counts(6, 0);
    for (std::size_t i = 0; i < ang.size(); ++i) {
        counts[static_cast<std::size_t>(ang.labels[i].class_index)]++;
        if (ang.in_train[i]) train_counts[static_cast<std::size_t>(ang.labels[i].class_index)]++;
    }
    for (int c = 0; c < 6; ++c) {
        CHECK(counts[static_cast<std::size_t>(c)] == 100);
        CHECK(train_counts[static_cast<std::size_t>(c)] == 67);
    }
}

TEST_CASE("dataset generation is deterministic under the seed") {
    TactileDataset a = generate_dataset(MisalignmentKind::Horizontal, 20, 0.4, 123);
    TactileDataset b = generate_dataset(MisalignmentKind::Horizontal, 20, 0.4, 123);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.frames[i] == b.frames[i]);
        CHECK(a.labels[i] == b.labels[i]);
        CHECK(a.in_train[i] == b.in_train[i]);
    }
    TactileDataset c = generate_dataset(MisalignmentKind::Horizontal, 20, 0.4, 124);
    bool any_differs = false;
    for (std::size_t i = 0; i < a.size() && !any_differs; ++i)
        if (!(a.frames[i] == c.frames[i])) any_differs = true;
    CHECK(any_differs);
    CHECK_THROWS_AS(generate_dataset(MisalignmentKind::Angular, 0, 0.4, 1), OutOfRangeError);
}

TEST_CASE("csv round trip preserves every force value") {
    TactileDataset d = generate_dataset(MisalignmentKind::Angular, 5, 0.4, 99);
    const std::string path = "test_tactile_roundtrip.csv";
    save_tactile_csv(d, path);
    TactileDataset r = load_tactile_csv(path, d.split_seed);
    REQUIRE(r.size() == d.size());
    CHECK(r.kind == d.kind);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(r.frames[i] == d.frames[i]);
        CHECK(r.labels[i] == d.labels[i]);
        CHECK(r.in_train[i] == d.in_train[i]);
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_tactile_csv("no_such_file.csv", 0), IoError);
}

TEST_CASE("json round trip preserves the dataset including its split") {
    TactileDataset d = generate_dataset(MisalignmentKind::Vertical, 4, 0.4, 5);
    const std::string path = "test_tactile_roundtrip.json";
    save_tactile_json(d, path);
    TactileDataset r = load_tactile_json(path);
    REQUIRE(r.size() == d.size());
    CHECK(r.kind == d.kind);
    CHECK(r.split_seed == d.split_seed);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(r.frames[i] == d.frames[i]);
        CHECK(r.labels[i] == d.labels[i]);
        CHECK(r.in_train[i] == d.in_train[i]);
    }
    std::remove(path.c_str());
}
