#include "styler/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <tomlplusplus/toml.hpp>

#include "styler/archive.hpp"
#include "styler/errors.hpp"
#include "styler/image.hpp"
#include "styler/rng.hpp"

namespace styler {

namespace fs = std::filesystem;

TrainConfig TrainConfig::defaults(ProfileKind profile)
{
    TrainConfig c;
    c.profile = profile;
    if (profile == ProfileKind::full) {
        c.image_size = 512;
        c.coarse_iters = 40000;
        c.fine_iters = 15000;
        c.checkpoint_every = 1000;
        c.log_every = 50;
    }
    return c;
}

void TrainConfig::validate() const
{
    if (image_size < 16 || image_size % 16 != 0) {
        throw ConfigError("image_size must be a positive multiple of 16, got " + std::to_string(image_size));
    }
    if (batch_size != 1) throw ConfigError("batch_size must be 1, got " + std::to_string(batch_size));
    if (coarse_iters < 1 || fine_iters < 1) throw ConfigError("coarse_iters and fine_iters must be positive");
    if (checkpoint_every < 0 || log_every < 1) {
        throw ConfigError("checkpoint_every must be >= 0 and log_every >= 1");
    }
    if (remd_max_samples < 1) throw ConfigError("remd_max_samples must be positive");
    if (profile == ProfileKind::full && !encoder_weights) {
        throw ConfigError("profile 'full' needs encoder_weights (a converted VGG-19 archive)");
    }
    weights.validate();
}

EncoderProfile TrainConfig::encoder_profile() const
{
    if (profile == ProfileKind::full) return EncoderProfile::full(encoder_weights.value_or(fs::path{}));
    return EncoderProfile::toy(encoder_seed);
}

FineConfig TrainConfig::fine_config() const
{
    FineConfig f = profile == ProfileKind::full ? FineConfig::full() : FineConfig::toy();
    f.fusion = fusion;
    f.use_coarse = use_coarse;
    return f;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

[[noreturn]] void bad_key(const std::string& key, const std::string& what)
{
    throw ConfigError("config key '" + key + "': " + what);
}

template <class T>
T read_value(const toml::node& node, const std::string& key)
{
    if constexpr (std::is_same_v<T, bool>) {
        if (auto v = node.value_exact<bool>()) return *v;
        bad_key(key, "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (auto v = node.value_exact<std::string>()) return *v;
        bad_key(key, "expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (auto v = node.value<double>()) return *v;
        bad_key(key, "expected a number");
    } else {
        if (auto v = node.value_exact<std::int64_t>()) return static_cast<T>(*v);
        bad_key(key, "expected an integer");
    }
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

TrainConfig parse_config(const std::string& text, const fs::path& base_dir)
{
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config parse error at line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(msg.str());
    }

    ProfileKind kind = ProfileKind::toy;
    if (const auto* p = root.get("profile")) {
        const auto name = read_value<std::string>(*p, "profile");
        try {
            kind = parse_profile(name);
        } catch (const Error&) {
            bad_key("profile", "expected 'full' or 'toy', got '" + name + "'");
        }
    }
    TrainConfig c = TrainConfig::defaults(kind);

    for (const auto& [k, node] : root) {
        const std::string key(k.str());
        if (key == "profile") continue;
        if (key == "content_root") c.content_root = resolve(base_dir, read_value<std::string>(node, key));
        else if (key == "style_image") c.style_image = resolve(base_dir, read_value<std::string>(node, key));
        else if (key == "image_size") c.image_size = read_value<int>(node, key);
        else if (key == "batch_size") c.batch_size = read_value<int>(node, key);
        else if (key == "coarse_iters") c.coarse_iters = read_value<long>(node, key);
        else if (key == "fine_iters") c.fine_iters = read_value<long>(node, key);
        else if (key == "use_coarse") c.use_coarse = read_value<bool>(node, key);
        else if (key == "seed") c.seed = read_value<std::uint64_t>(node, key);
        else if (key == "checkpoint_every") c.checkpoint_every = read_value<long>(node, key);
        else if (key == "log_every") c.log_every = read_value<long>(node, key);
        else if (key == "out_dir") c.out_dir = resolve(base_dir, read_value<std::string>(node, key));
        else if (key == "encoder_weights") c.encoder_weights = resolve(base_dir, read_value<std::string>(node, key));
        else if (key == "encoder_seed") c.encoder_seed = read_value<std::uint64_t>(node, key);
        else if (key == "coarse_checkpoint")
            c.coarse_checkpoint = resolve(base_dir, read_value<std::string>(node, key));
        else if (key == "remd_max_samples") c.remd_max_samples = read_value<int>(node, key);
        else if (key == "fusion") {
            const auto name = read_value<std::string>(node, key);
            try {
                c.fusion = parse_fusion(name);
            } catch (const Error&) {
                bad_key(key, "expected 'ssf' or 'concat', got '" + name + "'");
            }
        } else if (key == "optimizer") {
            const auto* t = node.as_table();
            if (!t) bad_key(key, "expected a table");
            for (const auto& [ok, on] : *t) {
                const std::string sub = key + "." + std::string(ok.str());
                if (ok == "lr") c.optimizer.lr = read_value<double>(on, sub);
                else if (ok == "beta1") c.optimizer.beta1 = read_value<double>(on, sub);
                else if (ok == "beta2") c.optimizer.beta2 = read_value<double>(on, sub);
                else if (ok == "eps") c.optimizer.eps = read_value<double>(on, sub);
                else if (ok == "name") {
                    if (read_value<std::string>(on, sub) != "adam") bad_key(sub, "only 'adam' is supported");
                } else bad_key(sub, "unknown key");
            }
        } else if (key == "weights") {
            const auto* t = node.as_table();
            if (!t) bad_key(key, "expected a table");
            for (const auto& [wk, wn] : *t) {
                const std::string sub = key + "." + std::string(wk.str());
                if (wk == "alpha") c.weights.alpha = read_value<double>(wn, sub);
                else if (wk == "lambda1") c.weights.lambda1 = read_value<double>(wn, sub);
                else if (wk == "lambda2") c.weights.lambda2 = read_value<double>(wn, sub);
                else if (wk == "lambda3") c.weights.lambda3 = read_value<double>(wn, sub);
                else if (wk == "recon_lambda") c.weights.recon_lambda = read_value<double>(wn, sub);
                else bad_key(sub, "unknown key");
            }
        } else {
            bad_key(key, "unknown key");
        }
    }
    c.validate();
    return c;
}

TrainConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Loss logs

namespace {

std::string csv_row(const LossRow& r)
{
    std::ostringstream s;
    s << std::setprecision(9) << r.iter << ',' << r.terms.perceptual << ',' << r.terms.remd << ',' << r.terms.gram
      << ',' << r.terms.meanvar << ',' << r.terms.total;
    return s.str();
}

class CsvLog {
public:
    explicit CsvLog(const fs::path& path) : path_(path), out_(path, std::ios::trunc)
    {
        if (!out_) throw IoError(path.string() + ": cannot open for writing");
        out_ << kLossCsvHeader << '\n';
    }
    void write(const LossRow& r)
    {
        out_ << csv_row(r) << '\n';
        out_.flush();
        if (!out_) throw IoError(path_.string() + ": write failed");
    }

private:
    fs::path path_;
    std::ofstream out_;
};

bool should_log(long iter, long total, long every)
{
    return iter == 1 || iter == total || iter % every == 0;
}

std::string progress_line(const char* stage, long iter, long total, const LossTerms& t)
{
    std::ostringstream s;
    s << stage << " iter " << iter << '/' << total << std::setprecision(5) << " l_p=" << t.perceptual
      << " l_r=" << t.remd << " l_g=" << t.gram << " l_m=" << t.meanvar << " total=" << t.total;
    return s.str();
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": " + ec.message());
}

Image square(const Image& img, int size)
{
    return img.height() == size && img.width() == size ? img : resize(img, size, size);
}

}  // namespace

void write_loss_csv(const fs::path& path, const std::vector<LossRow>& rows)
{
    CsvLog log(path);
    for (const auto& r : rows) log.write(r);
}

double trailing_mean_total(const std::vector<LossRow>& history, long iter, long window)
{
    double sum = 0.0;
    long n = 0;
    for (const auto& r : history) {
        if (r.iter > iter - window && r.iter <= iter) {
            sum += r.terms.total;
            ++n;
        }
    }
    if (n == 0) throw InvalidInput("no loss rows in the window ending at iteration " + std::to_string(iter));
    return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::string fmt_double(double v)
{
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

void describe_encoder(const TrainConfig& cfg, TensorArchive& a)
{
    a.set_meta("profile", std::string(profile_name(cfg.profile)));
    if (cfg.profile == ProfileKind::full) {
        a.set_meta("encoder_weights", fs::absolute(*cfg.encoder_weights).string());
        a.set_meta("encoder_digest", file_digest(*cfg.encoder_weights));
    } else {
        a.set_meta("encoder_seed", std::to_string(cfg.encoder_seed));
    }
}

EncoderProfile encoder_from_meta(const TensorArchive& a, const fs::path& origin)
{
    if (!a.has_meta("kind") || a.meta("kind") != "coarse") {
        throw LoadError(origin.string() + ": not a coarse checkpoint");
    }
    const ProfileKind kind = parse_profile(a.meta("profile"));
    if (kind == ProfileKind::full) {
        const fs::path weights = a.meta("encoder_weights");
        if (a.has_meta("encoder_digest") && fs::exists(weights) && file_digest(weights) != a.meta("encoder_digest")) {
            throw LoadError(origin.string() + ": encoder weights " + weights.string() + " changed since training");
        }
        return EncoderProfile::full(weights);
    }
    return EncoderProfile::toy(std::stoull(a.meta("encoder_seed")));
}

FineConfig fine_from_meta(const TensorArchive& a, const fs::path& origin)
{
    if (!a.has_meta("kind") || a.meta("kind") != "fine") throw LoadError(origin.string() + ": not a fine checkpoint");
    FineConfig f = parse_profile(a.meta("profile")) == ProfileKind::full ? FineConfig::full() : FineConfig::toy();
    f.fusion = parse_fusion(a.meta("fusion"));
    f.use_coarse = a.meta("use_coarse") == "true";
    return f;
}

}  // namespace

std::pair<Encoder, CoarseDecoder> load_coarse_checkpoint(const fs::path& path)
{
    const TensorArchive a = TensorArchive::load(path);
    Encoder enc(encoder_from_meta(a, path));
    CoarseDecoder dec(enc.widths());
    dec.load(a);
    return {std::move(enc), std::move(dec)};
}

// ---------------------------------------------------------------------------
// Training

TrainResult train_coarse(const TrainConfig& cfg, const ProgressFn& progress)
{
    cfg.validate();
    ensure_dir(cfg.out_dir);
    DatasetCursor data(cfg.content_root, cfg.seed);
    const Encoder enc(cfg.encoder_profile());
    CoarseDecoder dec(enc.widths());
    dec.init(mix_seed(cfg.seed, 1));
    Adam adam(dec.params(), cfg.optimizer);

    TrainResult result;
    result.checkpoint = cfg.out_dir / "coarse.nta";
    result.loss_csv = cfg.out_dir / "coarse_losses.csv";
    CsvLog log(result.loss_csv);
    const int size = cfg.image_size / 2;

    auto save = [&](long iter) {
        TensorArchive a;
        dec.store(a);
        a.set_meta("kind", "coarse");
        describe_encoder(cfg, a);
        a.set_meta("iterations", std::to_string(iter));
        a.set_meta("seed", std::to_string(cfg.seed));
        a.set_meta("image_size", std::to_string(cfg.image_size));
        a.save(result.checkpoint);
    };

    for (long iter = 1; iter <= cfg.coarse_iters; ++iter) {
        const Image x = square(data.next(), size);
        const Tensor feature = enc.extract(x, {Tap::ReLU_4_1}).at(Tap::ReLU_4_1);
        CoarseDecoderTape tape;
        const CoarseTaps out = dec.forward(feature, &tape);
        Tensor grad;
        const double loss = reconstruction_loss(out.r3, x.tensor(), enc, cfg.weights.recon_lambda, &grad);
        if (!std::isfinite(loss)) {
            throw NumericError("coarse training: non-finite loss at iteration " + std::to_string(iter) +
                               "; last checkpoint kept at " + result.checkpoint.string());
        }
        dec.zero_grad();
        dec.backward(tape, grad);
        adam.step();

        LossRow row{iter, {}};
        row.terms.total = loss;
        result.history.push_back(row);
        if (should_log(iter, cfg.coarse_iters, cfg.log_every)) {
            log.write(row);
            if (progress) progress(progress_line("coarse", iter, cfg.coarse_iters, row.terms));
        }
        if (cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0 && iter != cfg.coarse_iters) save(iter);
    }
    save(cfg.coarse_iters);
    return result;
}

TrainResult train_fine(const TrainConfig& cfg, const fs::path& coarse_ckpt, const ProgressFn& progress)
{
    cfg.validate();
    const TensorArchive coarse_archive = TensorArchive::load(coarse_ckpt);
    const std::string coarse_profile =
        coarse_archive.has_meta("profile") ? coarse_archive.meta("profile") : std::string("<none>");
    if (coarse_profile != profile_name(cfg.profile)) {
        throw ConfigError("coarse checkpoint " + coarse_ckpt.string() + " has profile '" + coarse_profile +
                          "' but the config asks for '" + std::string(profile_name(cfg.profile)) + "'");
    }
    const Encoder enc(encoder_from_meta(coarse_archive, coarse_ckpt));
    CoarseDecoder coarse(enc.widths());
    coarse.load(coarse_archive);

    ensure_dir(cfg.out_dir);
    DatasetCursor data(cfg.content_root, cfg.seed);
    const FineConfig fine_cfg = cfg.fine_config();
    FineNetwork fine(fine_cfg);
    fine.init(mix_seed(cfg.seed, 2));
    Adam adam(fine.params(), cfg.optimizer);

    const LayerAssignment assignment;
    const TapSet loss_taps = assignment.all();
    const Image style = square(load_image(cfg.style_image), cfg.image_size);
    const TapFeatures style_features = enc.extract(style, loss_taps);
    const Tensor style_coarse = enc.extract(downsample2(style), {Tap::ReLU_4_1}).at(Tap::ReLU_4_1);

    TrainResult result;
    result.checkpoint = cfg.out_dir / "fine.nta";
    result.loss_csv = cfg.out_dir / "fine_losses.csv";
    CsvLog log(result.loss_csv);
    const std::string coarse_digest = file_digest(coarse_ckpt);

    auto save = [&](long iter) {
        TensorArchive a;
        fine.store(a);
        a.set_meta("kind", "fine");
        a.set_meta("profile", std::string(profile_name(cfg.profile)));
        a.set_meta("fusion", std::string(fusion_name(cfg.fusion)));
        a.set_meta("use_coarse", cfg.use_coarse ? "true" : "false");
        a.set_meta("alpha", fmt_double(cfg.weights.alpha));
        a.set_meta("lambda1", fmt_double(cfg.weights.lambda1));
        a.set_meta("lambda2", fmt_double(cfg.weights.lambda2));
        a.set_meta("lambda3", fmt_double(cfg.weights.lambda3));
        a.set_meta("iterations", std::to_string(iter));
        a.set_meta("seed", std::to_string(cfg.seed));
        a.set_meta("coarse_digest", coarse_digest);
        a.save(result.checkpoint);
    };

    for (long iter = 1; iter <= cfg.fine_iters; ++iter) {
        const Image content = square(data.next(), cfg.image_size);
        std::optional<CoarseTaps> taps;
        if (cfg.use_coarse) taps = coarse_forward_cached(enc, coarse, downsample2(content), style_coarse);

        FineTape tape;
        const Tensor raw = fine.forward_raw(content.tensor(), taps ? &*taps : nullptr, &tape);
        EncoderTape enc_tape;
        const TapFeatures stylized = enc.extract(raw, loss_taps, &enc_tape);
        const TapFeatures content_features = enc.extract(content, assignment.perceptual);
        const RemdConfig remd{cfg.remd_max_samples, mix_seed(cfg.seed, static_cast<std::uint64_t>(iter))};
        const LossResult loss =
            total_loss(content_features, style_features, stylized, cfg.weights, assignment, remd, true);
        if (!std::isfinite(loss.terms.total)) {
            throw NumericError("fine training: non-finite loss at iteration " + std::to_string(iter) +
                               "; last checkpoint kept at " + result.checkpoint.string());
        }
        const Tensor grad_image = enc.backward(enc_tape, loss.grad_stylized);
        fine.zero_grad();
        fine.backward(tape, grad_image);
        adam.step();

        const LossRow row{iter, loss.terms};
        result.history.push_back(row);
        if (should_log(iter, cfg.fine_iters, cfg.log_every)) {
            log.write(row);
            if (progress) progress(progress_line("fine", iter, cfg.fine_iters, row.terms));
        }
        if (cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0 && iter != cfg.fine_iters) save(iter);
    }
    save(cfg.fine_iters);
    return result;
}

// ---------------------------------------------------------------------------
// Inference

Stylizer::Stylizer(Encoder enc, CoarseDecoder dec, std::optional<FineNetwork> fine)
    : enc_(std::move(enc)), dec_(std::move(dec)), fine_(std::move(fine))
{
}

Stylizer Stylizer::load(const fs::path& coarse_ckpt, const fs::path& fine_ckpt)
{
    auto [enc, dec] = load_coarse_checkpoint(coarse_ckpt);
    const TensorArchive a = TensorArchive::load(fine_ckpt);
    const FineConfig cfg = fine_from_meta(a, fine_ckpt);
    if (a.meta("profile") != profile_name(enc.profile().kind)) {
        throw ConfigError("fine checkpoint " + fine_ckpt.string() + " has profile '" + a.meta("profile") +
                          "' but the coarse checkpoint has '" + std::string(profile_name(enc.profile().kind)) + "'");
    }
    FineNetwork fine(cfg);
    fine.load(a);
    return Stylizer(std::move(enc), std::move(dec), std::move(fine));
}

Stylizer Stylizer::load_coarse(const fs::path& coarse_ckpt)
{
    auto [enc, dec] = load_coarse_checkpoint(coarse_ckpt);
    return Stylizer(std::move(enc), std::move(dec), std::nullopt);
}

Stylizer Stylizer::fresh_toy(std::uint64_t seed)
{
    Encoder enc(EncoderProfile::toy());
    CoarseDecoder dec(enc.widths());
    dec.init(mix_seed(seed, 1));
    FineNetwork fine(FineConfig::toy());
    fine.init(mix_seed(seed, 2));
    return Stylizer(std::move(enc), std::move(dec), std::move(fine));
}

std::pair<Image, Image> Stylizer::half_inputs(const Image& content, const Image& style) const
{
    if (content.height() % 16 != 0 || content.width() % 16 != 0) {
        throw InvalidInput("content size " + std::to_string(content.height()) + "x" + std::to_string(content.width()) +
                           " is not divisible by 16");
    }
    const Image s = style.height() % 16 == 0 && style.width() % 16 == 0
                        ? style
                        : resize(style, content.height(), content.width());
    return {downsample2(content), downsample2(s)};
}

Image Stylizer::stylize(const Image& content, const Image& style) const
{
    if (!fine_) throw ConfigError("no fine checkpoint loaded");
    const auto [hc, hs] = half_inputs(content, style);
    if (!fine_->config().use_coarse) return fine_forward_nocoarse(*fine_, content);
    return fine_forward(*fine_, content, coarse_forward(enc_, dec_, hc, hs));
}

Image Stylizer::stylize_coarse(const Image& content, const Image& style) const
{
    const auto [hc, hs] = half_inputs(content, style);
    return coarse_stylize(enc_, dec_, hc, hs);
}

// ---------------------------------------------------------------------------
// Ablation

std::vector<AblationRow> ablate(const TrainConfig& cfg, const ProgressFn& progress)
{
    cfg.validate();
    if (!cfg.coarse_checkpoint) throw ConfigError("ablate needs coarse_checkpoint in the config");
    const fs::path root = cfg.out_dir / "ablate";
    ensure_dir(root);

    struct Variant {
        std::string name;
        TrainConfig cfg;
    };
    std::vector<Variant> variants;
    auto add = [&](const std::string& name, auto&& edit) {
        TrainConfig v = cfg;
        edit(v);
        v.out_dir = root / name;
        variants.push_back({name, v});
    };
    add("base", [](TrainConfig&) {});
    add("no_alpha", [](TrainConfig& v) { v.weights.alpha = 0.0; });
    add("no_lambda1", [](TrainConfig& v) { v.weights.lambda1 = 0.0; });
    add("no_lambda2", [](TrainConfig& v) { v.weights.lambda2 = 0.0; });
    add("no_lambda3", [](TrainConfig& v) { v.weights.lambda3 = 0.0; });
    add("concat", [](TrainConfig& v) { v.fusion = FusionMode::concat; });
    add("no_coarse", [](TrainConfig& v) { v.use_coarse = false; });

    const DatasetCursor data(cfg.content_root, cfg.seed);
    const Image content = square(load_image(data.order().front()), cfg.image_size);
    const Image style = square(load_image(cfg.style_image), cfg.image_size);
    std::vector<Image> tiles = {content, style};

    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        if (progress) progress("ablate: training variant " + v.name);
        const TrainResult r = train_fine(v.cfg, *cfg.coarse_checkpoint, progress);
        AblationRow row{v.name, {}};
        const long last = r.history.back().iter;
        const long window = std::min<long>(10, last);
        long n = 0;
        for (const auto& h : r.history) {
            if (h.iter <= last - window) continue;
            row.final_terms.perceptual += h.terms.perceptual;
            row.final_terms.remd += h.terms.remd;
            row.final_terms.gram += h.terms.gram;
            row.final_terms.meanvar += h.terms.meanvar;
            row.final_terms.total += h.terms.total;
            ++n;
        }
        for (double* t : {&row.final_terms.perceptual, &row.final_terms.remd, &row.final_terms.gram,
                          &row.final_terms.meanvar, &row.final_terms.total})
            *t /= static_cast<double>(n);
        rows.push_back(row);
        tiles.push_back(Stylizer::load(*cfg.coarse_checkpoint, r.checkpoint).stylize(content, style));
    }

    std::ofstream table(root / "table.csv", std::ios::trunc);
    if (!table) throw IoError((root / "table.csv").string() + ": cannot open for writing");
    table << "variant,l_p,l_r,l_g,l_m,total\n" << std::setprecision(9);
    for (const auto& r : rows) {
        table << r.variant << ',' << r.final_terms.perceptual << ',' << r.final_terms.remd << ',' << r.final_terms.gram
              << ',' << r.final_terms.meanvar << ',' << r.final_terms.total << '\n';
    }
    if (!table) throw IoError((root / "table.csv").string() + ": write failed");
    save_image(hconcat(tiles), root / "grid.png");
    return rows;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

// Smooth background gradient with a few flat-colored discs and boxes.
Image synthetic_content(int size, Rng& rng)
{
    Image img(size, size);
    float base[3], dx[3], dy[3];
    for (int c = 0; c < 3; ++c) {
        base[c] = static_cast<float>(0.2 + 0.6 * rng.uniform());
        dx[c] = static_cast<float>(rng.uniform() - 0.5);
        dy[c] = static_cast<float>(rng.uniform() - 0.5);
    }
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c) {
                const float u = static_cast<float>(x) / size - 0.5f;
                const float v = static_cast<float>(y) / size - 0.5f;
                img(c, y, x) = base[c] + dx[c] * u + dy[c] * v;
            }
    const int shapes = 3 + static_cast<int>(rng.below(5));
    for (int s = 0; s < shapes; ++s) {
        const bool disc = rng.uniform() < 0.5;
        const double cx = rng.uniform() * size;
        const double cy = rng.uniform() * size;
        const double r = (0.08 + 0.22 * rng.uniform()) * size;
        const float col[3] = {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                              static_cast<float>(rng.uniform())};
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double ex = x - cx;
                const double ey = y - cy;
                const bool inside = disc ? ex * ex + ey * ey < r * r : std::fabs(ex) < r && std::fabs(ey) < 0.6 * r;
                if (inside)
                    for (int c = 0; c < 3; ++c) img(c, y, x) = col[c];
            }
    }
    return img.clamped();
}

// Oriented high-frequency color waves.
Image synthetic_style(int size, Rng& rng)
{
    Image img(size, size);
    double freq[3], angle[3], phase[3];
    for (int c = 0; c < 3; ++c) {
        freq[c] = 6.0 + 10.0 * rng.uniform();
        angle[c] = rng.uniform() * 3.14159265358979;
        phase[c] = rng.uniform() * 6.28318530717959;
    }
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c) {
                const double t = (std::cos(angle[c]) * x + std::sin(angle[c]) * y) / size;
                const double w = std::sin(6.28318530717959 * freq[c] * t + phase[c]);
                const double w2 = std::sin(6.28318530717959 * freq[(c + 1) % 3] * t * 0.5 + phase[c]);
                img(c, y, x) = static_cast<float>(0.5 + 0.35 * w * w2 + 0.1 * (w > 0 ? 1.0 : -1.0));
            }
    return img.clamped();
}

}  // namespace

void make_toy_data(const fs::path& root, int count, int size, std::uint64_t seed)
{
    if (count < 1 || size < 16) throw InvalidInput("make_toy_data: need count >= 1 and size >= 16");
    ensure_dir(root / "content");
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        std::ostringstream name;
        name << "img_" << std::setw(4) << std::setfill('0') << i << ".png";
        save_image(synthetic_content(size, rng), root / "content" / name.str());
    }
    save_image(synthetic_style(size, rng), root / "style.png");
}

}  // namespace styler
