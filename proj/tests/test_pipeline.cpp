#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "oracles.hpp"
#include "styler/archive.hpp"
#include "styler/errors.hpp"
#include "styler/evalkit.hpp"
#include "styler/optim.hpp"
#include "styler/pipeline.hpp"
#include "test_support.hpp"

using namespace styler;
using styler::testing::random_uniform;
using styler::testing::TempDir;
namespace fs = std::filesystem;

namespace {

Image random_image(int h, int w, std::uint64_t seed)
{
    return Image(random_uniform(3, h, w, seed));
}

std::string read_text(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<unsigned char> read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// A small toy run: 6 synthetic 32-pixel images and a handful of iterations.
TrainConfig tiny_config(const TempDir& dir, const std::string& run = "run")
{
    if (!fs::exists(dir / "data")) make_toy_data(dir / "data", 6, 32, 5);
    TrainConfig c = TrainConfig::defaults(ProfileKind::toy);
    c.content_root = dir / "data" / "content";
    c.style_image = dir / "data" / "style.png";
    c.image_size = 32;
    c.coarse_iters = 6;
    c.fine_iters = 4;
    c.checkpoint_every = 2;
    c.log_every = 1;
    c.out_dir = dir / run;
    return c;
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_text(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_SUITE("adam")
{
    TEST_CASE("matches a scalar reference over several steps")
    {
        Param p("w", {3});
        p.value = {0.5f, -1.0f, 2.0f};
        const std::vector<std::vector<double>> grads = {{0.3, -2.0, 1e-3}, {0.1, -1.0, 0.0}, {-0.4, 0.5, 5.0}};
        AdamConfig cfg;
        cfg.lr = 1e-2;
        Adam adam({&p}, cfg);
        for (const auto& g : grads) {
            for (int i = 0; i < 3; ++i) p.grad[i] = static_cast<float>(g[i]);
            adam.step();
        }
        for (int i = 0; i < 3; ++i) {
            const double x0 = i == 0 ? 0.5 : (i == 1 ? -1.0 : 2.0);
            const auto ref = styler::oracle::scalar_adam(x0, {grads[0][i], grads[1][i], grads[2][i]}, 1e-2, 0.9, 0.999,
                                                         1e-8);
            CHECK(p.value[i] == doctest::Approx(ref.back()).epsilon(1e-6));
        }
        CHECK(adam.steps_taken() == 3);
    }

    TEST_CASE("first step moves each coordinate by lr against the gradient sign")
    {
        Param p("w", {2});
        p.value = {1.0f, 1.0f};
        p.grad = {4.0f, -0.01f};
        Adam adam({&p});
        adam.step();
        CHECK(p.value[0] == doctest::Approx(1.0 - 1e-4).epsilon(1e-6));
        CHECK(p.value[1] == doctest::Approx(1.0 + 1e-4).epsilon(1e-6));
    }

    TEST_CASE("invalid hyperparameters are a configuration error")
    {
        Param p("w", {1});
        AdamConfig bad;
        bad.beta1 = 1.0;
        CHECK_THROWS_AS(Adam({&p}, bad), ConfigError);
        bad = {};
        bad.lr = 0.0;
        CHECK_THROWS_AS(Adam({&p}, bad), ConfigError);
    }
}

TEST_SUITE("ssim")
{
    TEST_CASE("window weights sum to one")
    {
        const auto taps = gaussian_taps(11, 1.5);
        double s = 0.0;
        for (double t : taps) s += t;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(taps[5] > taps[4]);
        CHECK(taps[0] == doctest::Approx(taps[10]).epsilon(1e-15));
    }

    TEST_CASE("self-similarity is exactly one")
    {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Image x = random_image(24, 19, seed);
            CHECK(ssim(x, x) == 1.0);
        }
        CHECK(ssim(Image(16, 16, 0.0f), Image(16, 16, 0.0f)) == 1.0);
    }

    TEST_CASE("symmetric")
    {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Image a = random_image(20, 20, 100 + seed);
            const Image b = random_image(20, 20, 200 + seed);
            CHECK(std::fabs(ssim(a, b) - ssim(b, a)) <= 1e-12);
        }
    }

    TEST_CASE("agrees with a direct per-window implementation on random pairs")
    {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Image a = random_image(16, 16, 300 + seed);
            const Image b = random_image(16, 16, 400 + seed);
            CHECK(std::fabs(ssim(a, b) - styler::oracle::scalar_ssim(a.tensor(), b.tensor())) < 1e-6);
        }
    }

    TEST_CASE("constant 0.5 against constant 0.6")
    {
        const Image a(16, 16, 0.5f);
        const Image b(16, 16, 0.6f);
        const double v = ssim(a, b);
        CHECK(std::fabs(v - styler::oracle::scalar_ssim(a.tensor(), b.tensor())) < 1e-6);
        // Only the luminance factor differs from one for flat images.
        const double ma = static_cast<double>(0.5f);
        const double mb = static_cast<double>(0.6f);
        CHECK(v == doctest::Approx((2 * ma * mb + 1e-4) / (ma * ma + mb * mb + 1e-4)).epsilon(1e-6));
    }

    TEST_CASE("range over random pairs")
    {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const Image a = random_image(16, 16, 500 + seed);
            const Image b = random_image(16, 16, 600 + seed);
            const double v = ssim(a, b);
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
            CHECK(ssim(a, a) == 1.0);
        }
    }

    TEST_CASE("shape mismatch and undersized inputs are rejected")
    {
        CHECK_THROWS_AS(ssim(Image(16, 16), Image(16, 17)), InvalidInput);
        CHECK_THROWS_AS(ssim(Image(10, 16), Image(10, 16)), InvalidInput);
        CHECK_THROWS_AS(ssim(Image(16, 16, 1.5f), Image(16, 16)), InvalidInput);
    }
}

TEST_SUITE("perceptual_distance")
{
    TEST_CASE("zero on identical, positive on distinct, monotone in noise")
    {
        const Encoder enc(EncoderProfile::toy());
        const Image x = random_image(32, 32, 1);
        CHECK(perceptual_distance(x, x, enc) == 0.0);
        CHECK(perceptual_distance(x, random_image(32, 32, 2), enc) > 0.0);

        const Tensor noise = styler::testing::random_tensor(3, 32, 32, 3);
        Image base(32, 32, 0.5f);
        for (int c = 0; c < 3; ++c)
            for (int p = 0; p < 32 * 32; ++p) base.tensor().channel(c)[p] = 0.3f + 0.4f * ((p / 32 + c) % 7) / 7.0f;
        double prev = 0.0;
        for (double amp : {0.02, 0.08, 0.2}) {
            Image noisy = base;
            for (std::size_t i = 0; i < noisy.tensor().size(); ++i)
                noisy.tensor()[i] = static_cast<float>(noisy.tensor()[i] + amp * noise[i]);
            const double d = perceptual_distance(base, noisy.clamped(), enc);
            CHECK(d > prev);
            prev = d;
        }
    }

    TEST_CASE("shape mismatch is invalid input")
    {
        const Encoder enc(EncoderProfile::toy());
        CHECK_THROWS_AS(perceptual_distance(Image(16, 16), Image(32, 32), enc), InvalidInput);
    }
}

TEST_SUITE("config")
{
    TEST_CASE("full key set parses and resolves paths against the file")
    {
        TempDir dir("cfg");
        std::ofstream(dir / "c.toml") << R"(profile = "toy"
content_root = "imgs"
style_image = "/abs/style.png"
image_size = 64
batch_size = 1
coarse_iters = 10
fine_iters = 20
fusion = "concat"
use_coarse = false
seed = 3
checkpoint_every = 5
log_every = 2
out_dir = "out"
[optimizer]
name = "adam"
lr = 2e-4
beta1 = 0.8
beta2 = 0.99
eps = 1e-7
[weights]
alpha = 2
lambda1 = 0
lambda2 = 500.0
lambda3 = 1
)";
        const TrainConfig c = load_config(dir / "c.toml");
        CHECK(c.content_root == dir / "imgs");
        CHECK(c.style_image == fs::path("/abs/style.png"));
        CHECK(c.image_size == 64);
        CHECK(c.coarse_iters == 10);
        CHECK(c.fine_iters == 20);
        CHECK(c.fusion == FusionMode::concat);
        CHECK_FALSE(c.use_coarse);
        CHECK(c.seed == 3);
        CHECK(c.optimizer.lr == 2e-4);
        CHECK(c.optimizer.beta1 == 0.8);
        CHECK(c.optimizer.eps == 1e-7);
        CHECK(c.weights.alpha == 2.0);
        CHECK(c.weights.lambda1 == 0.0);
        CHECK(c.weights.lambda2 == 500.0);
        CHECK(c.out_dir == dir / "out");
    }

    TEST_CASE("profile defaults")
    {
        const TrainConfig toy = parse_config("");
        CHECK(toy.image_size == 128);
        CHECK(toy.coarse_iters == 2000);
        CHECK(toy.fine_iters == 1500);
        CHECK(toy.optimizer.lr == 1e-4);
        CHECK(toy.optimizer.beta1 == 0.9);
        CHECK(toy.optimizer.beta2 == 0.999);
        CHECK(toy.optimizer.eps == 1e-8);
        CHECK(toy.weights.alpha == 1.0);
        CHECK(toy.weights.lambda1 == 20.0);
        CHECK(toy.weights.lambda2 == 1000.0);
        CHECK(toy.weights.lambda3 == 5.0);
        const TrainConfig full = parse_config("profile = \"full\"\nencoder_weights = \"vgg.nta\"\n");
        CHECK(full.image_size == 512);
        CHECK(full.coarse_iters == 40000);
        CHECK(full.fine_iters == 15000);
    }

    TEST_CASE("invalid configs are configuration errors")
    {
        CHECK_THROWS_AS(parse_config("batch_size = 2\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("image_size = 100\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("imagesize = 128\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("image_size = \"big\"\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("fusion = \"sum\"\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("profile = \"huge\"\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("profile = \"full\"\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("[weights]\nlambda2 = -1\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("[weights]\ngamma = 1\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("[optimizer]\nname = \"sgd\"\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("seed = \n"), ConfigError);
        CHECK_THROWS_AS(load_config("/nonexistent/cfg.toml"), ConfigError);
    }
}

TEST_SUITE("training")
{
    TEST_CASE("coarse training is deterministic and logs a well-formed CSV")
    {
        TempDir dir("coarse");
        const TrainConfig a = tiny_config(dir, "a");
        const TrainConfig b = tiny_config(dir, "b");
        const TrainResult ra = train_coarse(a);
        const TrainResult rb = train_coarse(b);
        CHECK(read_bytes(ra.checkpoint) == read_bytes(rb.checkpoint));
        CHECK(ra.history.size() == 6);

        const auto rows = csv_rows(ra.loss_csv);
        REQUIRE(rows.size() == 7);
        CHECK(read_text(ra.loss_csv).rfind("iter,l_p,l_r,l_g,l_m,total\n", 0) == 0);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CHECK(std::stol(rows[i][0]) == static_cast<long>(i));
            CHECK(std::isfinite(std::stod(rows[i][5])));
        }

        const TensorArchive ck = TensorArchive::load(ra.checkpoint);
        CHECK(ck.meta("kind") == "coarse");
        CHECK(ck.meta("profile") == "toy");
        CHECK(ck.meta("encoder_seed") == "7");
        CHECK(ck.meta("iterations") == "6");
    }

    TEST_CASE("coarse checkpoint reload reproduces the reconstruction")
    {
        TempDir dir("reload");
        const TrainConfig c = tiny_config(dir);
        const TrainResult r = train_coarse(c);
        const auto [enc, dec] = load_coarse_checkpoint(r.checkpoint);
        const Image x = random_image(16, 16, 9);
        const Encoder enc2(c.encoder_profile());
        CoarseDecoder dec2(enc2.widths());
        dec2.load(TensorArchive::load(r.checkpoint));
        CHECK(reconstruct_only(enc, dec, x) == reconstruct_only(enc2, dec2, x));
    }

    TEST_CASE("fine training leaves the coarse stage untouched and stylizes reproducibly")
    {
        TempDir dir("fine");
        TrainConfig c = tiny_config(dir);
        const TrainResult coarse = train_coarse(c);
        const std::string before = file_digest(coarse.checkpoint);
        const TrainResult fine = train_fine(c, coarse.checkpoint);
        CHECK(file_digest(coarse.checkpoint) == before);
        CHECK(fine.history.size() == 4);
        for (const auto& row : fine.history) CHECK(std::isfinite(row.terms.total));

        const TensorArchive fk = TensorArchive::load(fine.checkpoint);
        CHECK(fk.meta("kind") == "fine");
        CHECK(fk.meta("fusion") == "ssf");
        CHECK(fk.meta("use_coarse") == "true");
        CHECK(fk.meta("lambda2") == "1000");
        CHECK(fk.meta("iterations") == "4");
        CHECK(fk.meta("coarse_digest") == before);

        const Stylizer model = Stylizer::load(coarse.checkpoint, fine.checkpoint);
        const Image content = load_image(dir / "data" / "content" / "img_0000.png");
        const Image style = load_image(c.style_image);
        save_image(model.stylize(content, style), dir / "x1.png");
        save_image(Stylizer::load(coarse.checkpoint, fine.checkpoint).stylize(content, style), dir / "x2.png");
        CHECK(read_bytes(dir / "x1.png") == read_bytes(dir / "x2.png"));
        CHECK(model.stylize(content, style).height() == 32);
        CHECK(model.stylize_coarse(content, style).height() == 16);
    }

    TEST_CASE("zeroing a weight zeroes its CSV column")
    {
        TempDir dir("zero");
        TrainConfig c = tiny_config(dir);
        const TrainResult coarse = train_coarse(c);
        c.weights.lambda1 = 0.0;
        c.fine_iters = 2;
        const TrainResult fine = train_fine(c, coarse.checkpoint);
        const auto rows = csv_rows(fine.loss_csv);
        REQUIRE(rows.size() == 3);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CHECK(std::stod(rows[i][2]) == 0.0);
            CHECK(std::stod(rows[i][1]) > 0.0);
        }
    }

    TEST_CASE("variants dispatch to their network layout")
    {
        TempDir dir("variants");
        TrainConfig c = tiny_config(dir);
        const TrainResult coarse = train_coarse(c);
        c.fine_iters = 1;
        c.fusion = FusionMode::concat;
        const TrainResult concat = train_fine(c, coarse.checkpoint);
        const Stylizer m1 = Stylizer::load(coarse.checkpoint, concat.checkpoint);
        REQUIRE(m1.fine() != nullptr);
        CHECK(m1.fine()->config().fusion == FusionMode::concat);
        c.fusion = FusionMode::ssf;
        c.use_coarse = false;
        c.out_dir = dir / "nocoarse";
        const TrainResult nocoarse = train_fine(c, coarse.checkpoint);
        const Stylizer m2 = Stylizer::load(coarse.checkpoint, nocoarse.checkpoint);
        CHECK_FALSE(m2.fine()->config().use_coarse);
        CHECK(m2.stylize(Image(32, 32, 0.5f), Image(32, 32, 0.2f)).height() == 32);
    }

    TEST_CASE("profile mismatch between config and coarse checkpoint")
    {
        TempDir dir("mismatch");
        TrainConfig c = tiny_config(dir);
        const TrainResult coarse = train_coarse(c);
        TensorArchive a = TensorArchive::load(coarse.checkpoint);
        a.set_meta("profile", "full");
        a.save(dir / "forged.nta");
        CHECK_THROWS_AS(train_fine(c, dir / "forged.nta"), ConfigError);
    }

    TEST_CASE("a non-finite loss aborts and keeps the previous checkpoint")
    {
        TempDir dir("nan");
        TrainConfig c = tiny_config(dir);
        const TrainResult coarse = train_coarse(c);
        const TrainResult good = train_fine(c, coarse.checkpoint);
        const auto kept = read_bytes(good.checkpoint);
        c.weights.lambda2 = 1e308;
        c.weights.alpha = 1e308;
        CHECK_THROWS_AS(train_fine(c, coarse.checkpoint), NumericError);
        CHECK(read_bytes(good.checkpoint) == kept);
        const auto rows = csv_rows(good.loss_csv);
        CHECK(rows.size() == 1);
    }

    TEST_CASE("empty dataset is a configuration error")
    {
        TempDir dir("empty");
        TrainConfig c = tiny_config(dir);
        fs::create_directories(dir / "none");
        c.content_root = dir / "none";
        CHECK_THROWS_AS(train_coarse(c), ConfigError);
    }
}

TEST_SUITE("inference")
{
    TEST_CASE("content sides must be divisible by 16; odd style sizes are resized")
    {
        const Stylizer m = Stylizer::fresh_toy(3);
        CHECK_THROWS_AS(m.stylize(Image(40, 32), Image(32, 32)), InvalidInput);
        CHECK(m.stylize(Image(48, 32, 0.3f), random_image(41, 37, 2)).height() == 48);
        CHECK(m.stylize(Image(48, 32, 0.3f), random_image(64, 80, 2)).width() == 32);
    }

    TEST_CASE("bench with one run has zero spread")
    {
        const BenchResult r = bench_stylize(std::nullopt, std::nullopt, 1, 32);
        CHECK(r.samples.size() == 1);
        CHECK(r.std_seconds == 0.0);
        CHECK(r.mean_seconds > 0.0);
        CHECK_FALSE(r.hardware.empty());
        CHECK_THROWS_AS(bench_stylize(std::nullopt, std::nullopt, 0, 32), InvalidInput);
    }

    TEST_CASE("toy data generation is deterministic")
    {
        TempDir dir("toydata");
        make_toy_data(dir / "a", 3, 32, 11);
        make_toy_data(dir / "b", 3, 32, 11);
        for (const char* f : {"content/img_0000.png", "content/img_0002.png", "style.png"})
            CHECK(read_bytes(dir / "a" / f) == read_bytes(dir / "b" / f));
        CHECK(load_image(dir / "a" / "style.png").height() == 32);
    }
}

TEST_SUITE("cli")
{
    int run_cli(const std::string& args)
    {
        const std::string cmd = std::string(STYLER_CLI) + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    }

    TEST_CASE("exit codes")
    {
        TempDir dir("cli");
        make_toy_data(dir / "data", 4, 32, 1);
        std::ofstream(dir / "ok.toml") << "content_root = \"data/content\"\nstyle_image = \"data/style.png\"\n"
                                          "image_size = 32\ncoarse_iters = 2\nfine_iters = 2\nout_dir = \"out\"\n";
        std::ofstream(dir / "bad.toml") << "batch_size = 4\n";
        std::ofstream(dir / "nan.toml") << "content_root = \"data/content\"\nstyle_image = \"data/style.png\"\n"
                                           "image_size = 32\nfine_iters = 2\nout_dir = \"nan\"\n"
                                           "[weights]\nalpha = 1e308\nlambda2 = 1e308\n";
        const std::string d = dir.path().string();
        CHECK(run_cli("train-coarse --config " + d + "/ok.toml") == 0);
        CHECK(run_cli("train-fine --config " + d + "/ok.toml --coarse " + d + "/out/coarse.nta") == 0);
        CHECK(run_cli("stylize --coarse " + d + "/out/coarse.nta --fine " + d + "/out/fine.nta --content " + d +
                      "/data/content/img_0000.png --style " + d + "/data/style.png --out " + d + "/o.png") == 0);
        CHECK(load_image(dir / "o.png").height() == 32);
        CHECK(run_cli("stylize --coarse " + d + "/out/coarse.nta --coarse-only --content " + d +
                      "/data/content/img_0000.png --style " + d + "/data/style.png --out " + d + "/oc.png") == 0);
        CHECK(load_image(dir / "oc.png").height() == 16);
        CHECK(run_cli("eval ssim --a " + d + "/o.png --b " + d + "/o.png") == 0);
        CHECK(run_cli("train-coarse --config " + d + "/bad.toml") == 2);
        CHECK(run_cli("train-coarse") == 2);
        CHECK(run_cli("eval ssim --a " + d + "/missing.png --b " + d + "/o.png") == 3);
        CHECK(run_cli("train-fine --config " + d + "/nan.toml --coarse " + d + "/out/coarse.nta") == 4);
        CHECK(run_cli("bench --n 1 --size 32") == 0);
    }
}
