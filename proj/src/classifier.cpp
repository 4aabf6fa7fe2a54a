#include "mcsim/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "mcsim/errors.hpp"
#include "mcsim/rng.hpp"

namespace mcsim {

namespace {

// Architecture constants. The external contract is the layer recipe
// (2 convs + 3 fully connected); these widths are the sizing choice.
constexpr int kInCh = 2, kInHW = 10;
constexpr int kC1Ch = 8, kC1HW = 8;
constexpr int kC2Ch = 16, kC2HW = 6;
constexpr int kFlat = kC2Ch * kC2HW * kC2HW;  // 576
constexpr int kFc1 = 128, kFc2 = 64;
constexpr int kK = 3;

struct Workspace {
    int n = 0;
    // Activations, all [n, ...] row-major.
    std::vector<double> x0, z1, xhat1, y1, a1, z2, xhat2, y2, a2;
    std::vector<double> z3, a3, z4, a4, z5, probs;
    double mean1[kC1Ch], var1[kC1Ch], mean2[kC2Ch], var2[kC2Ch];
    // Backward scratch.
    std::vector<double> dy1, dz1, dy2, dz2, da2, dz3, da3, dz4, da4, dz5;

    void resize(int batch, int classes) {
        n = batch;
        const auto c1 = static_cast<std::size_t>(n) * kC1Ch * kC1HW * kC1HW;
        const auto c2 = static_cast<std::size_t>(n) * kC2Ch * kC2HW * kC2HW;
        x0.resize(static_cast<std::size_t>(n) * kInCh * kInHW * kInHW);
        z1.resize(c1); xhat1.resize(c1); y1.resize(c1); a1.resize(c1);
        z2.resize(c2); xhat2.resize(c2); y2.resize(c2); a2.resize(c2);
        z3.resize(static_cast<std::size_t>(n) * kFc1);
        a3.resize(z3.size());
        z4.resize(static_cast<std::size_t>(n) * kFc2);
        a4.resize(z4.size());
        z5.resize(static_cast<std::size_t>(n) * classes);
        probs.resize(z5.size());
        dy1.resize(c1); dz1.resize(c1);
        dy2.resize(c2); dz2.resize(c2); da2.resize(c2);
        dz3.resize(z3.size()); da3.resize(z3.size());
        dz4.resize(z4.size()); da4.resize(z4.size());
        dz5.resize(z5.size());
    }
};

void conv_forward(const double* in, int n, int in_ch, int in_hw, const Tensor& w,
                  const Tensor& b, int out_ch, int out_hw, double* out) {
    for (int s = 0; s < n; ++s)
        for (int o = 0; o < out_ch; ++o) {
            const double bias = b[static_cast<std::size_t>(o)];
            for (int y = 0; y < out_hw; ++y)
                for (int x = 0; x < out_hw; ++x) {
                    double acc = bias;
                    for (int i = 0; i < in_ch; ++i) {
                        const double* wp =
                            &w.data[static_cast<std::size_t>((o * in_ch + i) * kK * kK)];
                        const double* ip =
                            &in[static_cast<std::size_t>(((s * in_ch + i) * in_hw + y) * in_hw + x)];
                        for (int ky = 0; ky < kK; ++ky)
                            for (int kx = 0; kx < kK; ++kx)
                                acc += wp[ky * kK + kx] * ip[ky * in_hw + kx];
                    }
                    out[static_cast<std::size_t>(((s * out_ch + o) * out_hw + y) * out_hw + x)] =
                        acc;
                }
        }
}

void conv_backward(const double* in, int n, int in_ch, int in_hw, const Tensor& w,
                   int out_ch, int out_hw, const double* dout, Tensor& dw, Tensor& db,
                   double* din) {
    dw.fill(0.0);
    db.fill(0.0);
    if (din) std::fill(din, din + static_cast<std::size_t>(n) * in_ch * in_hw * in_hw, 0.0);
    for (int s = 0; s < n; ++s)
        for (int o = 0; o < out_ch; ++o)
            for (int y = 0; y < out_hw; ++y)
                for (int x = 0; x < out_hw; ++x) {
                    const double g =
                        dout[static_cast<std::size_t>(((s * out_ch + o) * out_hw + y) * out_hw + x)];
                    db[static_cast<std::size_t>(o)] += g;
                    for (int i = 0; i < in_ch; ++i) {
                        double* dwp = &dw.data[static_cast<std::size_t>((o * in_ch + i) * kK * kK)];
                        const double* wp =
                            &w.data[static_cast<std::size_t>((o * in_ch + i) * kK * kK)];
                        const std::size_t base =
                            static_cast<std::size_t>(((s * in_ch + i) * in_hw + y) * in_hw + x);
                        for (int ky = 0; ky < kK; ++ky)
                            for (int kx = 0; kx < kK; ++kx) {
                                dwp[ky * kK + kx] += g * in[base + ky * in_hw + kx];
                                if (din) din[base + ky * in_hw + kx] += g * wp[ky * kK + kx];
                            }
                    }
                }
}

void bn_forward_train(const double* x, int n, int ch, int hw2, const BatchNormLayer& bn,
                      double* mean, double* var, double* xhat, double* y) {
    const double inv_m = 1.0 / (static_cast<double>(n) * hw2);
    for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* xp = &x[static_cast<std::size_t>((i * ch + c) * hw2)];
            for (int k = 0; k < hw2; ++k) s += xp[k];
        }
        const double m = s * inv_m;
        double v = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* xp = &x[static_cast<std::size_t>((i * ch + c) * hw2)];
            for (int k = 0; k < hw2; ++k) {
                const double d = xp[k] - m;
                v += d * d;
            }
        }
        v *= inv_m;
        mean[c] = m;
        var[c] = v;
        const double inv_std = 1.0 / std::sqrt(v + kBnEpsilon);
        const double g = bn.gamma[static_cast<std::size_t>(c)];
        const double b = bn.beta[static_cast<std::size_t>(c)];
        for (int i = 0; i < n; ++i) {
            const std::size_t base = static_cast<std::size_t>((i * ch + c) * hw2);
            for (int k = 0; k < hw2; ++k) {
                const double xh = (x[base + k] - m) * inv_std;
                xhat[base + k] = xh;
                y[base + k] = g * xh + b;
            }
        }
    }
}

/// Fold the freshly computed batch statistics into the running ones.
void update_running(BatchNormLayer& bn, const double* mean, const double* var) {
    for (int c = 0; c < bn.ch; ++c) {
        bn.running_mean[static_cast<std::size_t>(c)] =
            (1.0 - kBnMomentum) * bn.running_mean[static_cast<std::size_t>(c)] +
            kBnMomentum * mean[c];
        bn.running_var[static_cast<std::size_t>(c)] =
            (1.0 - kBnMomentum) * bn.running_var[static_cast<std::size_t>(c)] +
            kBnMomentum * var[c];
    }
}

void bn_forward_eval(const double* x, int n, int ch, int hw2, const BatchNormLayer& bn,
                     double* y) {
    for (int c = 0; c < ch; ++c) {
        const double inv_std =
            1.0 / std::sqrt(bn.running_var[static_cast<std::size_t>(c)] + kBnEpsilon);
        const double m = bn.running_mean[static_cast<std::size_t>(c)];
        const double g = bn.gamma[static_cast<std::size_t>(c)];
        const double b = bn.beta[static_cast<std::size_t>(c)];
        for (int i = 0; i < n; ++i) {
            const std::size_t base = static_cast<std::size_t>((i * ch + c) * hw2);
            for (int k = 0; k < hw2; ++k) y[base + k] = g * (x[base + k] - m) * inv_std + b;
        }
    }
}

void bn_backward(int n, int ch, int hw2, const BatchNormLayer& bn, const double* var,
                 const double* xhat, const double* dy, Tensor& dgamma, Tensor& dbeta,
                 double* dx) {
    const double m = static_cast<double>(n) * hw2;
    for (int c = 0; c < ch; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t base = static_cast<std::size_t>((i * ch + c) * hw2);
            for (int k = 0; k < hw2; ++k) {
                sum_dy += dy[base + k];
                sum_dy_xhat += dy[base + k] * xhat[base + k];
            }
        }
        dgamma[static_cast<std::size_t>(c)] = sum_dy_xhat;
        dbeta[static_cast<std::size_t>(c)] = sum_dy;
        const double g = bn.gamma[static_cast<std::size_t>(c)];
        const double inv_std = 1.0 / std::sqrt(var[c] + kBnEpsilon);
        const double k1 = g * inv_std / m;
        for (int i = 0; i < n; ++i) {
            const std::size_t base = static_cast<std::size_t>((i * ch + c) * hw2);
            for (int k = 0; k < hw2; ++k)
                dx[base + k] =
                    k1 * (m * dy[base + k] - sum_dy - xhat[base + k] * sum_dy_xhat);
        }
    }
}

void relu_forward(const double* y, std::size_t n, double* a) {
    for (std::size_t i = 0; i < n; ++i) a[i] = y[i] > 0.0 ? y[i] : 0.0;
}

void relu_backward(const double* y, const double* da, std::size_t n, double* dy) {
    for (std::size_t i = 0; i < n; ++i) dy[i] = y[i] > 0.0 ? da[i] : 0.0;
}

void fc_forward(const double* in, int n, int in_dim, const LinearLayer& fc, double* out) {
    for (int s = 0; s < n; ++s) {
        const double* ip = &in[static_cast<std::size_t>(s) * in_dim];
        double* op = &out[static_cast<std::size_t>(s) * fc.out];
        for (int o = 0; o < fc.out; ++o) {
            const double* wp = &fc.w.data[static_cast<std::size_t>(o) * in_dim];
            double acc = fc.b[static_cast<std::size_t>(o)];
            for (int i = 0; i < in_dim; ++i) acc += wp[i] * ip[i];
            op[o] = acc;
        }
    }
}

void fc_backward(const double* in, int n, int in_dim, const LinearLayer& fc,
                 const double* dout, Tensor& dw, Tensor& db, double* din) {
    dw.fill(0.0);
    db.fill(0.0);
    if (din) std::fill(din, din + static_cast<std::size_t>(n) * in_dim, 0.0);
    for (int s = 0; s < n; ++s) {
        const double* ip = &in[static_cast<std::size_t>(s) * in_dim];
        const double* gp = &dout[static_cast<std::size_t>(s) * fc.out];
        double* dip = din ? &din[static_cast<std::size_t>(s) * in_dim] : nullptr;
        for (int o = 0; o < fc.out; ++o) {
            const double g = gp[o];
            db[static_cast<std::size_t>(o)] += g;
            double* dwp = &dw.data[static_cast<std::size_t>(o) * in_dim];
            const double* wp = &fc.w.data[static_cast<std::size_t>(o) * in_dim];
            for (int i = 0; i < in_dim; ++i) {
                dwp[i] += g * ip[i];
                if (dip) dip[i] += g * wp[i];
            }
        }
    }
}

/// Full forward pass over ws.x0 for ws.n samples; fills ws.probs.
void forward_batch(const CnnModel& m, Workspace& ws, RunMode mode) {
    const int n = ws.n;
    conv_forward(ws.x0.data(), n, kInCh, kInHW, m.conv1.w, m.conv1.b, kC1Ch, kC1HW,
                 ws.z1.data());
    if (mode == RunMode::Train)
        bn_forward_train(ws.z1.data(), n, kC1Ch, kC1HW * kC1HW, m.bn1, ws.mean1, ws.var1,
                         ws.xhat1.data(), ws.y1.data());
    else
        bn_forward_eval(ws.z1.data(), n, kC1Ch, kC1HW * kC1HW, m.bn1, ws.y1.data());
    relu_forward(ws.y1.data(), ws.y1.size(), ws.a1.data());

    conv_forward(ws.a1.data(), n, kC1Ch, kC1HW, m.conv2.w, m.conv2.b, kC2Ch, kC2HW,
                 ws.z2.data());
    if (mode == RunMode::Train)
        bn_forward_train(ws.z2.data(), n, kC2Ch, kC2HW * kC2HW, m.bn2, ws.mean2, ws.var2,
                         ws.xhat2.data(), ws.y2.data());
    else
        bn_forward_eval(ws.z2.data(), n, kC2Ch, kC2HW * kC2HW, m.bn2, ws.y2.data());
    relu_forward(ws.y2.data(), ws.y2.size(), ws.a2.data());

    fc_forward(ws.a2.data(), n, kFlat, m.fc1, ws.z3.data());
    relu_forward(ws.z3.data(), ws.z3.size(), ws.a3.data());
    fc_forward(ws.a3.data(), n, kFc1, m.fc2, ws.z4.data());
    relu_forward(ws.z4.data(), ws.z4.size(), ws.a4.data());
    fc_forward(ws.a4.data(), n, kFc2, m.fc3, ws.z5.data());

    for (int s = 0; s < n; ++s) {
        const double* zp = &ws.z5[static_cast<std::size_t>(s) * m.classes];
        double* pp = &ws.probs[static_cast<std::size_t>(s) * m.classes];
        double zmax = zp[0];
        for (int k = 1; k < m.classes; ++k) zmax = std::max(zmax, zp[k]);
        double sum = 0.0;
        for (int k = 0; k < m.classes; ++k) {
            pp[k] = std::exp(zp[k] - zmax);
            sum += pp[k];
        }
        for (int k = 0; k < m.classes; ++k) pp[k] /= sum;
    }
}

double mean_cross_entropy(const Workspace& ws, int classes, const std::vector<int>& labels) {
    double loss = 0.0;
    for (int s = 0; s < ws.n; ++s) {
        const double p =
            ws.probs[static_cast<std::size_t>(s) * classes + labels[static_cast<std::size_t>(s)]];
        loss -= std::log(std::max(p, 1e-300));
    }
    return loss / ws.n;
}

/// Gradients of the mean cross-entropy; forward_batch in Train mode must
/// have run on ws first. Writes into `g` (same structure as the model).
void backward_batch(const CnnModel& m, Workspace& ws, const std::vector<int>& labels,
                    CnnModel& g) {
    const int n = ws.n;
    for (int s = 0; s < n; ++s)
        for (int k = 0; k < m.classes; ++k) {
            const std::size_t i = static_cast<std::size_t>(s) * m.classes + k;
            ws.dz5[i] =
                (ws.probs[i] - (k == labels[static_cast<std::size_t>(s)] ? 1.0 : 0.0)) / n;
        }

    fc_backward(ws.a4.data(), n, kFc2, m.fc3, ws.dz5.data(), g.fc3.w, g.fc3.b,
                ws.da4.data());
    relu_backward(ws.z4.data(), ws.da4.data(), ws.z4.size(), ws.dz4.data());
    fc_backward(ws.a3.data(), n, kFc1, m.fc2, ws.dz4.data(), g.fc2.w, g.fc2.b,
                ws.da3.data());
    relu_backward(ws.z3.data(), ws.da3.data(), ws.z3.size(), ws.dz3.data());
    fc_backward(ws.a2.data(), n, kFlat, m.fc1, ws.dz3.data(), g.fc1.w, g.fc1.b,
                ws.da2.data());

    relu_backward(ws.y2.data(), ws.da2.data(), ws.y2.size(), ws.dy2.data());
    bn_backward(n, kC2Ch, kC2HW * kC2HW, m.bn2, ws.var2, ws.xhat2.data(), ws.dy2.data(),
                g.bn2.gamma, g.bn2.beta, ws.dz2.data());
    conv_backward(ws.a1.data(), n, kC1Ch, kC1HW, m.conv2.w, kC2Ch, kC2HW, ws.dz2.data(),
                  g.conv2.w, g.conv2.b, ws.dy1.data());

    relu_backward(ws.y1.data(), ws.dy1.data(), ws.y1.size(), ws.dy1.data());
    bn_backward(n, kC1Ch, kC1HW * kC1HW, m.bn1, ws.var1, ws.xhat1.data(), ws.dy1.data(),
                g.bn1.gamma, g.bn1.beta, ws.dz1.data());
    conv_backward(ws.x0.data(), n, kInCh, kInHW, m.conv1.w, kC1Ch, kC1HW, ws.dz1.data(),
                  g.conv1.w, g.conv1.b, nullptr);
}

/// Learned tensors in a fixed order (running stats excluded).
std::vector<Tensor*> learned_tensors(CnnModel& m) {
    return {&m.conv1.w, &m.conv1.b, &m.bn1.gamma, &m.bn1.beta,
            &m.conv2.w, &m.conv2.b, &m.bn2.gamma, &m.bn2.beta,
            &m.fc1.w,   &m.fc1.b,   &m.fc2.w,    &m.fc2.b,
            &m.fc3.w,   &m.fc3.b};
}

CnnModel structure_like(const CnnModel& m) {
    CnnModel z = m;
    for (Tensor* t : learned_tensors(z)) t->fill(0.0);
    return z;
}

void load_input(Workspace& ws, int slot, const TactileFrame& f) {
    std::copy(f.force_n.begin(), f.force_n.end(),
              ws.x0.begin() + static_cast<std::size_t>(slot) * f.force_n.size());
}

/// Eval-mode sweep over the indexed samples; returns {accuracy, mean CE}.
std::pair<double, double> evaluate_split(const CnnModel& m, Workspace& ws,
                                         const TactileDataset& d,
                                         const std::vector<std::size_t>& idx) {
    if (idx.empty()) return {0.0, 0.0};
    std::size_t correct = 0, at = 0;
    double loss_sum = 0.0;
    while (at < idx.size()) {
        const int bs = static_cast<int>(std::min<std::size_t>(64, idx.size() - at));
        ws.resize(bs, m.classes);
        for (int s = 0; s < bs; ++s) load_input(ws, s, d.frames[idx[at + s]]);
        forward_batch(m, ws, RunMode::Eval);
        for (int s = 0; s < bs; ++s) {
            const double* pp = &ws.probs[static_cast<std::size_t>(s) * m.classes];
            int arg = 0;
            for (int k = 1; k < m.classes; ++k)
                if (pp[k] > pp[arg]) arg = k;
            if (arg == d.labels[idx[at + s]].class_index) ++correct;
            loss_sum -= std::log(std::max(
                pp[d.labels[idx[at + s]].class_index], 1e-300));
        }
        at += static_cast<std::size_t>(bs);
    }
    return {static_cast<double>(correct) / idx.size(),
            loss_sum / static_cast<double>(idx.size())};
}

nlohmann::ordered_json tensor_to_json(const Tensor& t) {
    nlohmann::ordered_json j;
    j["shape"] = t.shape;
    j["data"] = t.data;
    return j;
}

Tensor tensor_from_json(const nlohmann::json& j) {
    Tensor t(j.at("shape").get<std::vector<int>>());
    const auto& data = j.at("data");
    if (data.size() != t.numel())
        throw IoError("model tensor data length does not match its shape");
    for (std::size_t i = 0; i < t.numel(); ++i) t.data[i] = data[i].get<double>();
    return t;
}

void validate_model(const CnnModel& m) {
    auto expect = [](const Tensor& t, std::vector<int> shape, const char* what) {
        if (t.shape != shape)
            throw ShapeMismatchError(std::string("model: unexpected shape for ") + what);
    };
    if (m.classes != num_classes(m.kind))
        throw ShapeMismatchError("model: class count does not match its kind");
    expect(m.conv1.w, {kC1Ch, kInCh, kK, kK}, "conv1.w");
    expect(m.conv1.b, {kC1Ch}, "conv1.b");
    expect(m.bn1.gamma, {kC1Ch}, "bn1.gamma");
    expect(m.bn1.beta, {kC1Ch}, "bn1.beta");
    expect(m.bn1.running_mean, {kC1Ch}, "bn1.running_mean");
    expect(m.bn1.running_var, {kC1Ch}, "bn1.running_var");
    expect(m.conv2.w, {kC2Ch, kC1Ch, kK, kK}, "conv2.w");
    expect(m.conv2.b, {kC2Ch}, "conv2.b");
    expect(m.bn2.gamma, {kC2Ch}, "bn2.gamma");
    expect(m.bn2.beta, {kC2Ch}, "bn2.beta");
    expect(m.bn2.running_mean, {kC2Ch}, "bn2.running_mean");
    expect(m.bn2.running_var, {kC2Ch}, "bn2.running_var");
    expect(m.fc1.w, {kFc1, kFlat}, "fc1.w");
    expect(m.fc1.b, {kFc1}, "fc1.b");
    expect(m.fc2.w, {kFc2, kFc1}, "fc2.w");
    expect(m.fc2.b, {kFc2}, "fc2.b");
    expect(m.fc3.w, {m.classes, kFc2}, "fc3.w");
    expect(m.fc3.b, {m.classes}, "fc3.b");
}

void xavier_fill(Tensor& w, double fan_in, double fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w.data) v = rng.uniform(-a, a);
}

}  // namespace

CnnModel init_model(MisalignmentKind kind, std::uint64_t seed) {
    CnnModel m;
    m.kind = kind;
    m.classes = num_classes(kind);

    m.conv1 = ConvLayer{kC1Ch, kInCh, kK, Tensor({kC1Ch, kInCh, kK, kK}), Tensor({kC1Ch})};
    m.bn1 = BatchNormLayer{kC1Ch, Tensor({kC1Ch}), Tensor({kC1Ch}), Tensor({kC1Ch}),
                           Tensor({kC1Ch})};
    m.conv2 = ConvLayer{kC2Ch, kC1Ch, kK, Tensor({kC2Ch, kC1Ch, kK, kK}), Tensor({kC2Ch})};
    m.bn2 = BatchNormLayer{kC2Ch, Tensor({kC2Ch}), Tensor({kC2Ch}), Tensor({kC2Ch}),
                           Tensor({kC2Ch})};
    m.fc1 = LinearLayer{kFc1, kFlat, Tensor({kFc1, kFlat}), Tensor({kFc1})};
    m.fc2 = LinearLayer{kFc2, kFc1, Tensor({kFc2, kFc1}), Tensor({kFc2})};
    m.fc3 = LinearLayer{m.classes, kFc2, Tensor({m.classes, kFc2}), Tensor({m.classes})};

    m.bn1.gamma.fill(1.0);
    m.bn1.running_var.fill(1.0);
    m.bn2.gamma.fill(1.0);
    m.bn2.running_var.fill(1.0);

    Rng rng(seed);
    xavier_fill(m.conv1.w, kInCh * kK * kK, kC1Ch * kK * kK, rng);
    xavier_fill(m.conv2.w, kC1Ch * kK * kK, kC2Ch * kK * kK, rng);
    xavier_fill(m.fc1.w, kFlat, kFc1, rng);
    xavier_fill(m.fc2.w, kFc1, kFc2, rng);
    xavier_fill(m.fc3.w, kFc2, m.classes, rng);
    return m;
}

std::vector<double> forward(const CnnModel& m, const TactileFrame& frame, RunMode mode) {
    validate_model(m);
    Workspace ws;
    ws.resize(1, m.classes);
    load_input(ws, 0, frame);
    forward_batch(m, ws, mode);
    return std::vector<double>(ws.probs.begin(), ws.probs.begin() + m.classes);
}

std::vector<double> forward(const CnnModel& m, const Tensor& input, RunMode mode) {
    if (input.shape != std::vector<int>{kInCh, kInHW, kInHW})
        throw ShapeMismatchError("forward: input tensor must be 2x10x10");
    TactileFrame f;
    std::copy(input.data.begin(), input.data.end(), f.force_n.begin());
    return forward(m, f, mode);
}

CnnModel train(const TactileDataset& dataset, const TrainConfig& cfg, TrainReport* report) {
    if (dataset.size() == 0) throw InvalidStateError("train: empty dataset");
    if (cfg.learning_rate <= 0.0 || cfg.epochs < 1 || cfg.batch_size < 1)
        throw InvalidStateError("train: invalid hyperparameters");
    std::vector<std::size_t> class_counts(static_cast<std::size_t>(num_classes(dataset.kind)), 0);
    for (const auto& l : dataset.labels) {
        if (l.kind != dataset.kind)
            throw InvalidStateError("train: dataset mixes misalignment kinds");
        class_counts[static_cast<std::size_t>(l.class_index)]++;
    }
    for (std::size_t c = 1; c < class_counts.size(); ++c)
        if (class_counts[c] != class_counts[0])
            throw InvalidStateError("train: dataset is not class-balanced");

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        (dataset.in_train[i] ? train_idx : val_idx).push_back(i);
    if (train_idx.empty()) throw InvalidStateError("train: empty training split");

    CnnModel model = init_model(dataset.kind, cfg.seed);
    CnnModel grads = structure_like(model);
    CnnModel velocity = structure_like(model);
    Workspace ws;

    CnnModel best = model;
    double best_acc = -1.0;
    int best_epoch = -1;

    std::vector<int> labels;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng order_rng(derive_seed(cfg.seed, 0xE70C4ull, static_cast<std::uint64_t>(epoch)));
        order_rng.shuffle(train_idx);

        std::size_t at = 0;
        while (at < train_idx.size()) {
            const int bs =
                static_cast<int>(std::min<std::size_t>(cfg.batch_size, train_idx.size() - at));
            ws.resize(bs, model.classes);
            labels.resize(static_cast<std::size_t>(bs));
            for (int s = 0; s < bs; ++s) {
                load_input(ws, s, dataset.frames[train_idx[at + s]]);
                labels[static_cast<std::size_t>(s)] =
                    dataset.labels[train_idx[at + s]].class_index;
            }
            forward_batch(model, ws, RunMode::Train);
            update_running(model.bn1, ws.mean1, ws.var1);
            update_running(model.bn2, ws.mean2, ws.var2);
            const double loss = mean_cross_entropy(ws, model.classes, labels);
            if (!std::isfinite(loss)) throw DivergedError("train: loss left the reals");
            backward_batch(model, ws, labels, grads);

            auto mp = learned_tensors(model);
            auto gp = learned_tensors(grads);
            auto vp = learned_tensors(velocity);
            for (std::size_t t = 0; t < mp.size(); ++t)
                for (std::size_t i = 0; i < mp[t]->numel(); ++i) {
                    double& v = vp[t]->data[i];
                    v = cfg.momentum * v + gp[t]->data[i];
                    mp[t]->data[i] -= cfg.learning_rate * v;
                }
            at += static_cast<std::size_t>(bs);
        }

        // Post-epoch measurements on frozen weights: loss over the whole
        // train split as one batch (a fixed function of the weights, so it
        // does not wobble with minibatch composition or running-stat state),
        // accuracy over the validation split under deployment semantics.
        ws.resize(static_cast<int>(train_idx.size()), model.classes);
        labels.resize(train_idx.size());
        for (std::size_t s = 0; s < train_idx.size(); ++s) {
            load_input(ws, static_cast<int>(s), dataset.frames[train_idx[s]]);
            labels[s] = dataset.labels[train_idx[s]].class_index;
        }
        forward_batch(model, ws, RunMode::Train);
        const double epoch_loss = mean_cross_entropy(ws, model.classes, labels);
        const double acc = val_idx.empty()
                               ? evaluate_split(model, ws, dataset, train_idx).first
                               : evaluate_split(model, ws, dataset, val_idx).first;
        if (report) {
            report->train_loss.push_back(epoch_loss);
            report->val_accuracy.push_back(acc);
        }
        if (acc > best_acc) {
            best_acc = acc;
            best_epoch = epoch;
            best = model;
        }
    }
    if (report) {
        report->best_epoch = best_epoch;
        report->best_val_accuracy = best_acc;
    }
    return best;
}

double gradient_check(const CnnModel& m, const TactileFrame& frame,
                      const MisalignmentLabel& label) {
    validate_model(m);
    CnnModel model = m;
    CnnModel grads = structure_like(model);
    Workspace ws;
    ws.resize(1, model.classes);
    load_input(ws, 0, frame);
    const std::vector<int> labels{label.class_index};

    forward_batch(model, ws, RunMode::Train);
    backward_batch(model, ws, labels, grads);
    const int C = model.classes;

    // Pristine single-sample activations, snapshotted before any perturbation.
    const std::vector<double> z3 = ws.z3, a3 = ws.a3, z4 = ws.z4, a4 = ws.a4, z5 = ws.z5;
    const std::vector<double> a2 = ws.a2;
    const int target = label.class_index;

    auto loss_from_logits = [&](const double* logits) {
        double zmax = logits[0];
        for (int k = 1; k < C; ++k) zmax = std::max(zmax, logits[k]);
        double sum = 0.0;
        for (int k = 0; k < C; ++k) sum += std::exp(logits[k] - zmax);
        return std::log(sum) - (logits[target] - zmax);
    };
    const double loss0 = loss_from_logits(z5.data());

    std::vector<double> z5p(static_cast<std::size_t>(C)), a4p(kFc2);
    // Loss after adding dz to one pre-activation of the named fc stage, with
    // everything downstream recomputed exactly. Cheap because a unit change
    // only fans out through the later layers.
    auto loss_fc3 = [&](int o, double dz) {
        std::copy(z5.begin(), z5.end(), z5p.begin());
        z5p[static_cast<std::size_t>(o)] += dz;
        return loss_from_logits(z5p.data());
    };
    auto loss_fc2 = [&](int o, double dz) {
        const double a_new = std::max(z4[static_cast<std::size_t>(o)] + dz, 0.0);
        const double da = a_new - a4[static_cast<std::size_t>(o)];
        if (da == 0.0) return loss0;
        for (int k = 0; k < C; ++k)
            z5p[static_cast<std::size_t>(k)] =
                z5[static_cast<std::size_t>(k)] +
                model.fc3.w.data[static_cast<std::size_t>(k) * kFc2 + o] * da;
        return loss_from_logits(z5p.data());
    };
    auto loss_fc1 = [&](int o, double dz) {
        const double a_new = std::max(z3[static_cast<std::size_t>(o)] + dz, 0.0);
        const double da = a_new - a3[static_cast<std::size_t>(o)];
        if (da == 0.0) return loss0;
        for (int j = 0; j < kFc2; ++j)
            a4p[static_cast<std::size_t>(j)] =
                std::max(z4[static_cast<std::size_t>(j)] +
                             model.fc2.w.data[static_cast<std::size_t>(j) * kFc1 + o] * da,
                         0.0);
        for (int k = 0; k < C; ++k) {
            const double* wp = &model.fc3.w.data[static_cast<std::size_t>(k) * kFc2];
            double acc = model.fc3.b[static_cast<std::size_t>(k)];
            for (int j = 0; j < kFc2; ++j) acc += wp[j] * a4p[static_cast<std::size_t>(j)];
            z5p[static_cast<std::size_t>(k)] = acc;
        }
        return loss_from_logits(z5p.data());
    };

    const double h = 1e-5;
    double worst = 0.0;
    auto consider = [&](double analytic, double numeric) {
        const double diff = std::abs(analytic - numeric);
        if (diff < 1e-8) return;  // dead-path floor
        worst = std::max(worst, diff / std::max(std::abs(analytic), std::abs(numeric)));
    };

    // Conv and batch-norm parameters: few enough to re-run the whole net.
    std::vector<Tensor*> early_p{&model.conv1.w, &model.conv1.b, &model.bn1.gamma,
                                 &model.bn1.beta, &model.conv2.w, &model.conv2.b,
                                 &model.bn2.gamma, &model.bn2.beta};
    std::vector<Tensor*> early_g{&grads.conv1.w, &grads.conv1.b, &grads.bn1.gamma,
                                 &grads.bn1.beta, &grads.conv2.w, &grads.conv2.b,
                                 &grads.bn2.gamma, &grads.bn2.beta};
    auto full_loss = [&]() {
        forward_batch(model, ws, RunMode::Train);
        return mean_cross_entropy(ws, C, labels);
    };
    for (std::size_t t = 0; t < early_p.size(); ++t)
        for (std::size_t i = 0; i < early_p[t]->numel(); ++i) {
            const double saved = early_p[t]->data[i];
            early_p[t]->data[i] = saved + h;
            const double lp = full_loss();
            early_p[t]->data[i] = saved - h;
            const double lm = full_loss();
            early_p[t]->data[i] = saved;
            consider(early_g[t]->data[i], (lp - lm) / (2.0 * h));
        }

    // Fully connected parameters via the staged evaluators. A weight w[o,i]
    // shifts its stage's pre-activation o by h * input[i]; a bias by h.
    for (int o = 0; o < kFc1; ++o) {
        for (int i = 0; i < kFlat; ++i) {
            const double dz = h * a2[static_cast<std::size_t>(i)];
            consider(grads.fc1.w.data[static_cast<std::size_t>(o) * kFlat + i],
                     (loss_fc1(o, dz) - loss_fc1(o, -dz)) / (2.0 * h));
        }
        consider(grads.fc1.b[static_cast<std::size_t>(o)],
                 (loss_fc1(o, h) - loss_fc1(o, -h)) / (2.0 * h));
    }
    for (int o = 0; o < kFc2; ++o) {
        for (int i = 0; i < kFc1; ++i) {
            const double dz = h * a3[static_cast<std::size_t>(i)];
            consider(grads.fc2.w.data[static_cast<std::size_t>(o) * kFc1 + i],
                     (loss_fc2(o, dz) - loss_fc2(o, -dz)) / (2.0 * h));
        }
        consider(grads.fc2.b[static_cast<std::size_t>(o)],
                 (loss_fc2(o, h) - loss_fc2(o, -h)) / (2.0 * h));
    }
    for (int o = 0; o < C; ++o) {
        for (int i = 0; i < kFc2; ++i) {
            const double dz = h * a4[static_cast<std::size_t>(i)];
            consider(grads.fc3.w.data[static_cast<std::size_t>(o) * kFc2 + i],
                     (loss_fc3(o, dz) - loss_fc3(o, -dz)) / (2.0 * h));
        }
        consider(grads.fc3.b[static_cast<std::size_t>(o)],
                 (loss_fc3(o, h) - loss_fc3(o, -h)) / (2.0 * h));
    }
    return worst;
}

MisalignmentLabel classify(const CnnModel& m, const TactileFrame& frame) {
    const std::vector<double> p = forward(m, frame, RunMode::Eval);
    int arg = 0;
    for (int k = 1; k < m.classes; ++k)
        if (p[static_cast<std::size_t>(k)] > p[static_cast<std::size_t>(arg)]) arg = k;
    return MisalignmentLabel{m.kind, arg};
}

GateDecision safety_gate(const MisalignmentLabel& angular, double critical_angle_deg) {
    if (angular.kind != MisalignmentKind::Angular)
        throw WrongKindError("safety_gate: needs an angular label");
    return angular_class_phi_deg(angular.class_index) < critical_angle_deg
               ? GateDecision::Charge
               : GateDecision::Abort;
}

void save_model_json(const CnnModel& m, const std::string& path) {
    validate_model(m);
    nlohmann::ordered_json doc;
    doc["format_version"] = 1;
    doc["kind"] = to_string(m.kind);
    doc["classes"] = m.classes;
    doc["conv1"] = {{"w", tensor_to_json(m.conv1.w)}, {"b", tensor_to_json(m.conv1.b)}};
    doc["bn1"] = {{"gamma", tensor_to_json(m.bn1.gamma)},
                  {"beta", tensor_to_json(m.bn1.beta)},
                  {"running_mean", tensor_to_json(m.bn1.running_mean)},
                  {"running_var", tensor_to_json(m.bn1.running_var)}};
    doc["conv2"] = {{"w", tensor_to_json(m.conv2.w)}, {"b", tensor_to_json(m.conv2.b)}};
    doc["bn2"] = {{"gamma", tensor_to_json(m.bn2.gamma)},
                  {"beta", tensor_to_json(m.bn2.beta)},
                  {"running_mean", tensor_to_json(m.bn2.running_mean)},
                  {"running_var", tensor_to_json(m.bn2.running_var)}};
    doc["fc1"] = {{"w", tensor_to_json(m.fc1.w)}, {"b", tensor_to_json(m.fc1.b)}};
    doc["fc2"] = {{"w", tensor_to_json(m.fc2.w)}, {"b", tensor_to_json(m.fc2.b)}};
    doc["fc3"] = {{"w", tensor_to_json(m.fc3.w)}, {"b", tensor_to_json(m.fc3.b)}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

CnnModel load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid model JSON: " + std::string(e.what()));
    }
    try {
        if (doc.at("format_version").get<int>() != 1)
            throw IoError("unsupported model format version");
        CnnModel m;
        m.kind = misalignment_kind_from_string(doc.at("kind").get<std::string>());
        m.classes = doc.at("classes").get<int>();
        m.conv1 = ConvLayer{kC1Ch, kInCh, kK, tensor_from_json(doc.at("conv1").at("w")),
                            tensor_from_json(doc.at("conv1").at("b"))};
        m.bn1 = BatchNormLayer{kC1Ch, tensor_from_json(doc.at("bn1").at("gamma")),
                               tensor_from_json(doc.at("bn1").at("beta")),
                               tensor_from_json(doc.at("bn1").at("running_mean")),
                               tensor_from_json(doc.at("bn1").at("running_var"))};
        m.conv2 = ConvLayer{kC2Ch, kC1Ch, kK, tensor_from_json(doc.at("conv2").at("w")),
                            tensor_from_json(doc.at("conv2").at("b"))};
        m.bn2 = BatchNormLayer{kC2Ch, tensor_from_json(doc.at("bn2").at("gamma")),
                               tensor_from_json(doc.at("bn2").at("beta")),
                               tensor_from_json(doc.at("bn2").at("running_mean")),
                               tensor_from_json(doc.at("bn2").at("running_var"))};
        m.fc1 = LinearLayer{kFc1, kFlat, tensor_from_json(doc.at("fc1").at("w")),
                            tensor_from_json(doc.at("fc1").at("b"))};
        m.fc2 = LinearLayer{kFc2, kFc1, tensor_from_json(doc.at("fc2").at("w")),
                            tensor_from_json(doc.at("fc2").at("b"))};
        m.fc3 = LinearLayer{m.classes, kFc2, tensor_from_json(doc.at("fc3").at("w")),
                            tensor_from_json(doc.at("fc3").at("b"))};
        validate_model(m);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("model JSON missing fields: " + std::string(e.what()));
    }
}

} // namespace mcsim
