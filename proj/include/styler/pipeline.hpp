#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "styler/coarse_net.hpp"
#include "styler/encoder.hpp"
#include "styler/fine_net.hpp"
#include "styler/losses.hpp"
#include "styler/optim.hpp"
#include "styler/ssf.hpp"

namespace styler {

/// Training run description. Relative paths in a config file are resolved
/// against the file's directory.
struct TrainConfig {
    ProfileKind profile = ProfileKind::toy;
    std::filesystem::path content_root;
    std::filesystem::path style_image;
    int image_size = 128;
    int batch_size = 1;
    AdamConfig optimizer;
    long coarse_iters = 2000;
    long fine_iters = 1500;
    LossWeights weights;
    FusionMode fusion = FusionMode::ssf;
    bool use_coarse = true;
    std::uint64_t seed = 0;
    long checkpoint_every = 500;
    long log_every = 10;
    /// Directory receiving checkpoints and loss logs.
    std::filesystem::path out_dir = "runs";
    /// Pretrained VGG-19 archive (full profile only).
    std::optional<std::filesystem::path> encoder_weights;
    /// Weight seed of the toy encoder.
    std::uint64_t encoder_seed = 7;
    /// Trained coarse stage used by ablate.
    std::optional<std::filesystem::path> coarse_checkpoint;
    int remd_max_samples = 1024;

    /// Profile defaults: image size, iteration counts.
    static TrainConfig defaults(ProfileKind profile);

    /// Throws ConfigError on an invalid combination.
    void validate() const;

    EncoderProfile encoder_profile() const;
    FineConfig fine_config() const;
};

/// Parses TOML text; unknown keys and ill-typed values are ConfigError.
TrainConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
TrainConfig load_config(const std::filesystem::path& path);

struct LossRow {
    long iter = 0;
    LossTerms terms;
};

/// CSV header of every loss log.
inline constexpr const char* kLossCsvHeader = "iter,l_p,l_r,l_g,l_m,total";

struct TrainResult {
    std::filesystem::path checkpoint;
    std::filesystem::path loss_csv;
    std::vector<LossRow> history;  // every iteration, also the unlogged ones
};

/// Optional progress sink; receives one line per logged iteration.
using ProgressFn = std::function<void(const std::string&)>;

/// Stage 1: trains the coarse decoder to reconstruct content images at
/// image_size/2 from their ReLU_4_1 features. Writes out_dir/coarse.nta and
/// out_dir/coarse_losses.csv (the reconstruction loss in the total column).
TrainResult train_coarse(const TrainConfig& cfg, const ProgressFn& progress = {});

/// Stage 2: trains the fine network against a frozen coarse checkpoint.
/// Writes out_dir/fine.nta and out_dir/fine_losses.csv. A non-finite loss
/// throws NumericError and leaves the last periodic checkpoint in place.
TrainResult train_fine(const TrainConfig& cfg, const std::filesystem::path& coarse_ckpt,
                       const ProgressFn& progress = {});

/// Encoder plus trained networks, ready for inference.
class Stylizer {
public:
    static Stylizer load(const std::filesystem::path& coarse_ckpt, const std::filesystem::path& fine_ckpt);
    static Stylizer load_coarse(const std::filesystem::path& coarse_ckpt);
    /// Untrained toy networks, for timing and smoke tests.
    static Stylizer fresh_toy(std::uint64_t seed);

    /// Full two-stage stylization at the content resolution. The content
    /// sides must be divisible by 16; a style whose sides are not is resized
    /// to the content size first.
    Image stylize(const Image& content, const Image& style) const;

    /// Coarse stage only, at half the content resolution.
    Image stylize_coarse(const Image& content, const Image& style) const;

    const Encoder& encoder() const { return enc_; }
    const CoarseDecoder& coarse() const { return dec_; }
    const FineNetwork* fine() const { return fine_ ? &*fine_ : nullptr; }

private:
    Stylizer(Encoder enc, CoarseDecoder dec, std::optional<FineNetwork> fine);
    std::pair<Image, Image> half_inputs(const Image& content, const Image& style) const;

    Encoder enc_;
    CoarseDecoder dec_;
    std::optional<FineNetwork> fine_;
};

/// Reads the encoder description and decoder weights of a coarse
/// checkpoint written by train_coarse.
std::pair<Encoder, CoarseDecoder> load_coarse_checkpoint(const std::filesystem::path& path);

/// Writes `rows` as a loss CSV.
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRow>& rows);

/// Mean total loss over the iterations in (iter - window, iter].
double trailing_mean_total(const std::vector<LossRow>& history, long iter, long window);

struct AblationRow {
    std::string variant;
    LossTerms final_terms;  // trailing mean over the last 10 iterations
};

/// Trains the base configuration and the variants zeroing α, λ1, λ2, λ3 in
/// turn, fusion=concat and use_coarse=false, all from cfg.coarse_checkpoint.
/// Writes out_dir/ablate/<variant>/, a loss table ablate/table.csv and an
/// image grid ablate/grid.png (content, style, then one tile per variant).
std::vector<AblationRow> ablate(const TrainConfig& cfg, const ProgressFn& progress = {});

/// Writes `count` synthetic content images and one style image
/// (root/style.png, content under root/content/) for toy runs.
void make_toy_data(const std::filesystem::path& root, int count, int size, std::uint64_t seed);

}  // namespace styler
