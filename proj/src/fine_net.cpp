#include "styler/fine_net.hpp"

#include "styler/archive.hpp"
#include "styler/errors.hpp"

namespace styler {

FineConfig FineConfig::full()
{
    FineConfig c;
    c.widths = {64, 128, 256, 512};
    c.merge_channels = 64;
    return c;
}

FineConfig FineConfig::toy()
{
    return FineConfig{};
}

FineNetwork::FineNetwork(const FineConfig& cfg)
    : cfg_(cfg)
{
    const auto [w1, w2, w3, w4] = cfg.widths;
    const int m = cfg.merge_channels;
    if (cfg.residual_blocks < 0 || m < 1) throw ConfigError("invalid fine network configuration");

    enc_.emplace_back("enc_conv1", 3, w1, 1);
    enc_.emplace_back("enc_conv2", w1, w2, 2);
    enc_.emplace_back("enc_conv3", w2, w3, 2);
    enc_.emplace_back("enc_conv4", w3, w4, 2);
    for (int k = 1; k <= cfg.residual_blocks; ++k) {
        res_.emplace_back("res" + std::to_string(k) + ".conv1", w4, w4);
        res_.emplace_back("res" + std::to_string(k) + ".conv2", w4, w4);
    }
    if (cfg.use_coarse) {
        ssfs_.emplace_back("ssf1", w4, w2, m);
        ssfs_.emplace_back("ssf2", w3, w1, m);
        ssfs_.emplace_back("ssf3", w2, 3, m);
        dec_.emplace_back("dec_conv1", w4 + m, w3);
        dec_.emplace_back("dec_conv2", w3 + m, w2);
        dec_.emplace_back("dec_conv3", w2 + m, 3);
    } else {
        dec_.emplace_back("dec_conv1", w4, w3);
        dec_.emplace_back("dec_conv2", w3, w2);
        dec_.emplace_back("dec_conv3", w2, 3);
    }
}

void FineNetwork::init(std::uint64_t seed)
{
    Rng rng(seed);
    for (auto& c : enc_) c.init_he(rng);
    for (auto& c : res_) c.init_he(rng);
    for (auto& s : ssfs_) s.init(rng);
    for (auto& c : dec_) c.init_he(rng);
}

Tensor FineNetwork::forward_raw(const Tensor& content, const CoarseTaps* taps, FineTape* tape) const
{
    if (content.channels() != 3 || content.height() % 8 != 0 || content.width() % 8 != 0 || content.empty()) {
        throw InvalidInput("fine network input must be 3×h×w with h, w divisible by 8, got " + content.shape().str());
    }
    if (cfg_.use_coarse && taps == nullptr) {
        throw ConfigError("fine network was built with coarse fusion; coarse taps are required");
    }
    if (!cfg_.use_coarse && taps != nullptr) {
        throw ConfigError("fine network was built without the coarse stage; it cannot consume coarse taps");
    }
    const int h = content.height();
    const int w = content.width();
    if (taps) {
        const Tensor* stage_taps[3] = {&taps->r1, &taps->r2, &taps->r3};
        const int divisors[3] = {8, 4, 2};
        for (int k = 0; k < 3; ++k) {
            const Tensor& t = *stage_taps[k];
            if (t.height() != h / divisors[k] || t.width() != w / divisors[k]) {
                throw InvalidInput("fine stage " + std::to_string(k + 1) + ": coarse tap " + t.shape().str() +
                                   " does not match content " + content.shape().str() + " / " +
                                   std::to_string(divisors[k]));
            }
        }
    }
    if (tape) {
        tape->res_in.clear();
        tape->res_mid.clear();
    }

    Tensor x = content;
    for (std::size_t i = 0; i < enc_.size(); ++i) {
        if (tape) tape->enc_in[i] = x;
        x = enc_[i].forward(x);
        relu_inplace(x);
        if (tape) tape->enc_out[i] = x;
    }
    for (std::size_t b = 0; b < res_.size(); b += 2) {
        Tensor mid = res_[b].forward(x);
        relu_inplace(mid);
        Tensor y = res_[b + 1].forward(mid);
        if (tape) {
            tape->res_in.push_back(x);
            tape->res_mid.push_back(mid);
        }
        y += x;
        x = std::move(y);
    }

    const Tensor* stage_taps[3] = {taps ? &taps->r1 : nullptr, taps ? &taps->r2 : nullptr,
                                   taps ? &taps->r3 : nullptr};
    for (int k = 0; k < 3; ++k) {
        if (cfg_.use_coarse) {
            x = ssfs_[k].forward(x, *stage_taps[k], cfg_.fusion, tape ? &tape->ssf[k] : nullptr);
        }
        x = upsample2(x);
        if (tape) tape->conv_in[k] = x;
        x = dec_[k].forward(x);
        if (k < 2) relu_inplace(x);
        if (tape) tape->conv_out[k] = x;
    }
    return x;
}

void FineNetwork::backward(const FineTape& tape, const Tensor& grad_output)
{
    Tensor g = grad_output;
    for (int k = 2; k >= 0; --k) {
        if (k < 2) relu_backward_inplace(g, tape.conv_out[k]);
        g = dec_[k].backward(tape.conv_in[k], g, true);
        g = upsample2_backward(g);
        if (cfg_.use_coarse) g = ssfs_[k].backward(tape.ssf[k], g, cfg_.fusion).f_cs;
    }
    for (std::size_t b = res_.size(); b >= 2; b -= 2) {
        const std::size_t block = b / 2 - 1;
        Tensor g_mid = res_[b - 1].backward(tape.res_mid[block], g, true);
        relu_backward_inplace(g_mid, tape.res_mid[block]);
        Tensor g_in = res_[b - 2].backward(tape.res_in[block], g_mid, true);
        g += g_in;
    }
    for (std::size_t i = enc_.size(); i-- > 0;) {
        relu_backward_inplace(g, tape.enc_out[i]);
        g = enc_[i].backward(tape.enc_in[i], g, i > 0);
    }
}

std::vector<Param*> FineNetwork::params()
{
    std::vector<Param*> out;
    auto add_conv = [&out](Conv3x3& c) {
        out.push_back(&c.weight);
        out.push_back(&c.bias);
    };
    for (auto& c : enc_) add_conv(c);
    for (auto& c : res_) add_conv(c);
    for (auto& s : ssfs_)
        for (auto* p : s.params()) out.push_back(p);
    for (auto& c : dec_) add_conv(c);
    return out;
}

std::vector<const Param*> FineNetwork::params() const
{
    std::vector<const Param*> out;
    for (auto* p : const_cast<FineNetwork*>(this)->params()) out.push_back(p);
    return out;
}

std::size_t FineNetwork::parameter_count() const
{
    std::size_t n = 0;
    for (const auto* p : params()) n += p->size();
    return n;
}

void FineNetwork::zero_grad()
{
    for (auto* p : params()) p->zero_grad();
}

void FineNetwork::store(TensorArchive& archive) const
{
    for (const auto* p : params()) styler::store(*p, archive);
}

void FineNetwork::load(const TensorArchive& archive)
{
    for (auto* p : params()) styler::load(*p, archive);
}

Image fine_forward(const FineNetwork& net, const Image& content, const CoarseTaps& taps)
{
    return Image(net.forward_raw(content.tensor(), &taps)).clamped();
}

Image fine_forward_nocoarse(const FineNetwork& net, const Image& content)
{
    if (net.config().use_coarse) {
        throw ConfigError("fine_forward_nocoarse called on a network built with SSF stage channel counts");
    }
    return Image(net.forward_raw(content.tensor(), nullptr)).clamped();
}

}  // namespace styler
