#include "styler/ssf.hpp"

#include <algorithm>
#include <cmath>

#include "styler/errors.hpp"

namespace styler {

namespace {

int hidden_for(int channels)
{
    return std::max(4, channels / 8);
}

float sigmoid(float z)
{
    return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(z))));
}

}  // namespace

std::string_view fusion_name(FusionMode mode)
{
    return mode == FusionMode::ssf ? "ssf" : "concat";
}

FusionMode parse_fusion(std::string_view name)
{
    if (name == "ssf") return FusionMode::ssf;
    if (name == "concat") return FusionMode::concat;
    throw ConfigError("unknown fusion mode \"" + std::string(name) + "\" (expected ssf or concat)");
}

SsfModule::SsfModule(const std::string& name, int cs_channels, int r_channels, int merge_channels)
    : name_(name), cs_channels_(cs_channels), r_channels_(r_channels), merge_channels_(merge_channels),
      mlp1_(name + ".mlp1", cs_channels + r_channels, hidden_for(cs_channels + r_channels)),
      mlp2_(name + ".mlp2", hidden_for(cs_channels + r_channels), cs_channels),
      refine_(name + ".refine", cs_channels + r_channels, merge_channels)
{
}

void SsfModule::init(Rng& rng)
{
    mlp1_.init_he(rng);
    mlp2_.init_he(rng);
    refine_.init_he(rng);
}

void SsfModule::check_inputs(const Tensor& f_cs, const Tensor& f_r) const
{
    if (f_cs.height() != f_r.height() || f_cs.width() != f_r.width()) {
        throw InvalidInput(name_ + ": spatial mismatch between f_cs " + f_cs.shape().str() + " and f_r " +
                           f_r.shape().str());
    }
    if (f_cs.channels() != cs_channels_ || f_r.channels() != r_channels_) {
        throw InvalidInput(name_ + ": expected " + std::to_string(cs_channels_) + "+" + std::to_string(r_channels_) +
                           " channels, got f_cs " + f_cs.shape().str() + " and f_r " + f_r.shape().str());
    }
}

std::vector<float> SsfModule::attention(const Tensor& f_cs, const Tensor& f_r) const
{
    Tape tape;
    forward(f_cs, f_r, FusionMode::ssf, &tape);
    return tape.attention;
}

Tensor SsfModule::forward(const Tensor& f_cs, const Tensor& f_r, FusionMode mode, Tape* tape) const
{
    check_inputs(f_cs, f_r);
    Tensor f_csr = concat_channels(f_cs, f_r);
    const std::size_t plane = f_cs.shape().plane();

    std::vector<float> pooled(f_csr.channels());
    std::vector<float> hidden;
    std::vector<float> att(cs_channels_, 1.0f);
    if (mode == FusionMode::ssf) {
        for (int c = 0; c < f_csr.channels(); ++c) {
            double acc = 0.0;
            const float* p = f_csr.channel(c);
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            pooled[c] = static_cast<float>(acc / static_cast<double>(plane));
        }
        hidden = mlp1_.forward(pooled);
        for (auto& v : hidden) v = std::max(v, 0.0f);
        const auto logits = mlp2_.forward(hidden);
        for (int c = 0; c < cs_channels_; ++c) att[c] = sigmoid(logits[c]);
    }

    Tensor refined = refine_.forward(f_csr);
    relu_inplace(refined);

    Tensor selected = f_cs;
    for (int c = 0; c < cs_channels_; ++c) {
        float* p = selected.channel(c);
        for (std::size_t i = 0; i < plane; ++i) p[i] *= att[c];
    }
    Tensor out = concat_channels(selected, refined);
    if (tape) {
        tape->f_cs = f_cs;
        tape->f_csr = std::move(f_csr);
        tape->pooled = std::move(pooled);
        tape->hidden = std::move(hidden);
        tape->attention = std::move(att);
        tape->refined = std::move(refined);
    }
    return out;
}

SsfModule::InputGrads SsfModule::backward(const Tape& tape, const Tensor& grad_out, FusionMode mode)
{
    const Tensor& f_cs = tape.f_cs;
    const std::size_t plane = f_cs.shape().plane();
    if (grad_out.shape() != Shape{out_channels(), f_cs.height(), f_cs.width()}) {
        throw InvalidInput(name_ + ": gradient shape " + grad_out.shape().str() + " does not match output");
    }
    Tensor g_selected = slice_channels(grad_out, 0, cs_channels_);
    Tensor g_refined = slice_channels(grad_out, cs_channels_, merge_channels_);

    relu_backward_inplace(g_refined, tape.refined);
    Tensor g_csr = refine_.backward(tape.f_csr, g_refined, true);

    Tensor g_cs_direct(f_cs.shape());
    std::vector<float> g_att(cs_channels_, 0.0f);
    for (int c = 0; c < cs_channels_; ++c) {
        const float* g = g_selected.channel(c);
        const float* f = f_cs.channel(c);
        float* d = g_cs_direct.channel(c);
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            d[i] = g[i] * tape.attention[c];
            acc += static_cast<double>(g[i]) * f[i];
        }
        g_att[c] = static_cast<float>(acc);
    }

    if (mode == FusionMode::ssf) {
        std::vector<float> g_logits(cs_channels_);
        for (int c = 0; c < cs_channels_; ++c) {
            const float m = tape.attention[c];
            g_logits[c] = g_att[c] * m * (1.0f - m);
        }
        auto g_hidden = mlp2_.backward(tape.hidden, g_logits);
        for (std::size_t i = 0; i < g_hidden.size(); ++i) {
            if (!(tape.hidden[i] > 0.0f)) g_hidden[i] = 0.0f;
        }
        const auto g_pooled = mlp1_.backward(tape.pooled, g_hidden);
        for (int c = 0; c < g_csr.channels(); ++c) {
            const float g = g_pooled[c] / static_cast<float>(plane);
            float* p = g_csr.channel(c);
            for (std::size_t i = 0; i < plane; ++i) p[i] += g;
        }
    }

    InputGrads out{slice_channels(g_csr, 0, cs_channels_), slice_channels(g_csr, cs_channels_, r_channels_)};
    out.f_cs += g_cs_direct;
    return out;
}

std::vector<Param*> SsfModule::params()
{
    return {&mlp1_.weight, &mlp1_.bias, &mlp2_.weight, &mlp2_.bias, &refine_.weight, &refine_.bias};
}

std::vector<const Param*> SsfModule::params() const
{
    return {&mlp1_.weight, &mlp1_.bias, &mlp2_.weight, &mlp2_.bias, &refine_.weight, &refine_.bias};
}

Tensor ssf_forward(const SsfModule& module, const Tensor& f_cs, const Tensor& f_r)
{
    return module.forward(f_cs, f_r, FusionMode::ssf);
}

Tensor concat_fusion(const Tensor& f_cs, const Tensor& f_r, const Conv3x3& refine)
{
    if (f_cs.height() != f_r.height() || f_cs.width() != f_r.width()) {
        throw InvalidInput("concat_fusion: spatial mismatch between f_cs " + f_cs.shape().str() + " and f_r " +
                           f_r.shape().str());
    }
    Tensor refined = refine.forward(concat_channels(f_cs, f_r));
    relu_inplace(refined);
    return concat_channels(f_cs, refined);
}

}  // namespace styler
