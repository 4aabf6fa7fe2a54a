#ifndef MCSIM_CLASSIFIER_HPP
#define MCSIM_CLASSIFIER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mcsim/tactile.hpp"
#include "mcsim/tensor.hpp"

namespace mcsim {

enum class RunMode { Train, Eval };
enum class GateDecision { Charge, Abort };

struct ConvLayer {
    int out_ch = 0, in_ch = 0, k = 3;
    Tensor w;  // [out_ch, in_ch, k, k]
    Tensor b;  // [out_ch]
};

struct BatchNormLayer {
    int ch = 0;
    Tensor gamma, beta;               // learned affine, [ch]
    Tensor running_mean, running_var; // eval-mode statistics, [ch]
};

struct LinearLayer {
    int out = 0, in = 0;
    Tensor w;  // [out, in]
    Tensor b;  // [out]
};

inline constexpr double kBnEpsilon = 1e-5;
inline constexpr double kBnMomentum = 0.1;

/// The misalignment classifier: two 3x3 valid convolutions (2->8->16
/// channels, 10->8->6 spatial) each followed by batch norm and ReLU, then
/// 576->128->64->C fully connected with ReLU between, softmax on top.
struct CnnModel {
    MisalignmentKind kind = MisalignmentKind::Angular;
    int classes = 6;
    ConvLayer conv1, conv2;
    BatchNormLayer bn1, bn2;
    LinearLayer fc1, fc2, fc3;
};

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int epochs = 60;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

struct TrainReport {
    // Both measured on the frozen weights at the end of each epoch, so they
    // do not depend on that epoch's minibatch composition.
    std::vector<double> train_loss;    // mean cross-entropy over the train split
    std::vector<double> val_accuracy;
    int best_epoch = -1;               // 0-based epoch of the kept checkpoint
    double best_val_accuracy = 0.0;
};

/// Fresh model with Xavier-uniform weights, zero biases, identity batch
/// norm. Deterministic under the seed.
CnnModel init_model(MisalignmentKind kind, std::uint64_t seed);

/// Class probabilities for one frame. Train mode normalizes with the
/// single-sample batch statistics; Eval uses the running ones.
std::vector<double> forward(const CnnModel& m, const TactileFrame& frame,
                            RunMode mode = RunMode::Eval);

/// Same, for a raw tensor that must be shaped [2,10,10]; throws
/// ShapeMismatchError otherwise.
std::vector<double> forward(const CnnModel& m, const Tensor& input,
                            RunMode mode = RunMode::Eval);

/// Minibatch SGD with momentum on cross-entropy over the dataset's train
/// split; returns the epoch checkpoint with the best validation accuracy.
/// Deterministic under cfg.seed. Throws DivergedError when the loss leaves
/// the reals and InvalidStateError on an empty or unbalanced dataset.
CnnModel train(const TactileDataset& dataset, const TrainConfig& cfg,
               TrainReport* report = nullptr);

/// Max relative error between analytic gradients and central finite
/// differences (h = 1e-5) of the single-sample training loss, swept over
/// every parameter. Differences below 1e-8 count as zero error.
double gradient_check(const CnnModel& m, const TactileFrame& frame,
                      const MisalignmentLabel& label);

/// Argmax of forward() in eval mode.
MisalignmentLabel classify(const CnnModel& m, const TactileFrame& frame);

/// Charge only when the classified tilt is strictly below the critical
/// angle. Throws WrongKindError for non-angular labels.
GateDecision safety_gate(const MisalignmentLabel& angular,
                         double critical_angle_deg = 3.0);

void save_model_json(const CnnModel& m, const std::string& path);
CnnModel load_model_json(const std::string& path);

} // namespace mcsim

#endif // MCSIM_CLASSIFIER_HPP
