#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "styler/archive.hpp"
#include "styler/errors.hpp"
#include "styler/evalkit.hpp"
#include "styler/image.hpp"
#include "styler/pipeline.hpp"

using namespace styler;
namespace fs = std::filesystem;

namespace {

void print_progress(const std::string& line)
{
    std::cerr << line << '\n';
}

int run(int argc, char** argv)
{
    CLI::App app{"Two-stage coarse-to-fine style transfer"};
    app.require_subcommand(1);

    std::string config;
    std::string coarse;
    std::string fine;

    auto* train_coarse_cmd = app.add_subcommand("train-coarse", "Train the coarse reconstruction decoder");
    train_coarse_cmd->add_option("--config", config, "TOML training config")->required();

    auto* train_fine_cmd = app.add_subcommand("train-fine", "Train the fine network against a frozen coarse stage");
    train_fine_cmd->add_option("--config", config, "TOML training config")->required();
    train_fine_cmd->add_option("--coarse", coarse, "Coarse checkpoint")->required();

    std::string content;
    std::string style;
    std::string out;
    bool coarse_only = false;
    auto* stylize_cmd = app.add_subcommand("stylize", "Stylize one content image");
    stylize_cmd->add_option("--coarse", coarse, "Coarse checkpoint")->required();
    stylize_cmd->add_option("--fine", fine, "Fine checkpoint");
    stylize_cmd->add_option("--content", content, "Content image")->required();
    stylize_cmd->add_option("--style", style, "Style image")->required();
    stylize_cmd->add_option("--out", out, "Output PNG")->required();
    stylize_cmd->add_flag("--coarse-only", coarse_only, "Emit the half-resolution coarse result");

    auto* eval_cmd = app.add_subcommand("eval", "Image metrics");
    eval_cmd->require_subcommand(1);
    std::string img_a;
    std::string img_b;
    auto* ssim_cmd = eval_cmd->add_subcommand("ssim", "SSIM on luminance");
    ssim_cmd->add_option("--a", img_a)->required();
    ssim_cmd->add_option("--b", img_b)->required();
    std::uint64_t encoder_seed = 7;
    auto* perc_cmd = eval_cmd->add_subcommand("perceptual", "Feature distance under the toy encoder (not LPIPS)");
    perc_cmd->add_option("--a", img_a)->required();
    perc_cmd->add_option("--b", img_b)->required();
    perc_cmd->add_option("--encoder-seed", encoder_seed, "Toy encoder weight seed");

    int bench_n = 100;
    int bench_size = 512;
    auto* bench_cmd = app.add_subcommand("bench", "Time full stylization");
    bench_cmd->add_option("--n", bench_n, "Timed runs")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--size", bench_size, "Square image side")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--coarse", coarse, "Coarse checkpoint (default: untrained toy networks)");
    bench_cmd->add_option("--fine", fine, "Fine checkpoint");

    auto* ablate_cmd = app.add_subcommand("ablate", "Train and compare the loss and architecture variants");
    ablate_cmd->add_option("--config", config, "TOML training config with coarse_checkpoint")->required();

    int toy_n = 200;
    int toy_size = 128;
    std::uint64_t toy_seed = 0;
    auto* toy_cmd = app.add_subcommand("make-toy-data", "Write a synthetic content set and style image");
    toy_cmd->add_option("--out", out, "Output directory")->required();
    toy_cmd->add_option("--n", toy_n, "Number of content images")->check(CLI::PositiveNumber);
    toy_cmd->add_option("--size", toy_size, "Square image side")->check(CLI::PositiveNumber);
    toy_cmd->add_option("--seed", toy_seed, "Generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (*train_coarse_cmd) {
        const TrainResult r = train_coarse(load_config(config), print_progress);
        std::cout << "coarse checkpoint " << r.checkpoint.string() << " (" << file_digest(r.checkpoint) << ")\n";
    } else if (*train_fine_cmd) {
        const TrainResult r = train_fine(load_config(config), coarse, print_progress);
        std::cout << "fine checkpoint " << r.checkpoint.string() << " (" << file_digest(r.checkpoint) << ")\n";
    } else if (*stylize_cmd) {
        const Image c = load_image(content);
        const Image s = load_image(style);
        if (coarse_only) {
            save_image(Stylizer::load_coarse(coarse).stylize_coarse(c, s), out);
        } else {
            if (fine.empty()) throw ConfigError("stylize needs --fine unless --coarse-only is given");
            save_image(Stylizer::load(coarse, fine).stylize(c, s), out);
        }
        std::cout << out << '\n';
    } else if (*ssim_cmd) {
        std::printf("%.12f\n", ssim(load_image(img_a), load_image(img_b)));
    } else if (*perc_cmd) {
        const Encoder enc(EncoderProfile::toy(encoder_seed));
        std::printf("%.12f\n", perceptual_distance(load_image(img_a), load_image(img_b), enc));
    } else if (*bench_cmd) {
        std::optional<fs::path> c;
        std::optional<fs::path> f;
        if (!coarse.empty()) c = coarse;
        if (!fine.empty()) f = fine;
        const BenchResult r = bench_stylize(c, f, bench_n, bench_size);
        std::printf("bench n=%d size=%d: %.4f +/- %.4f s per image (%s)\n", r.n, r.size, r.mean_seconds,
                    r.std_seconds, r.hardware.c_str());
    } else if (*ablate_cmd) {
        const auto rows = ablate(load_config(config), print_progress);
        std::printf("%-12s %12s %12s %12s %12s %12s\n", "variant", "l_p", "l_r", "l_g", "l_m", "total");
        for (const auto& r : rows) {
            std::printf("%-12s %12.6g %12.6g %12.6g %12.6g %12.6g\n", r.variant.c_str(), r.final_terms.perceptual,
                        r.final_terms.remd, r.final_terms.gram, r.final_terms.meanvar, r.final_terms.total);
        }
    } else if (*toy_cmd) {
        make_toy_data(out, toy_n, toy_size, toy_seed);
        std::cout << out << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "styler: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "styler: " << e.what() << '\n';
        return 1;
    }
}
