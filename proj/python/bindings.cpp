#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "styler/archive.hpp"
#include "styler/errors.hpp"
#include "styler/evalkit.hpp"
#include "styler/image.hpp"
#include "styler/losses.hpp"
#include "styler/pipeline.hpp"
#include "styler/wct.hpp"

namespace py = pybind11;
using namespace styler;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a)
{
    if (a.ndim() != 3) throw InvalidInput("expected a (channels, height, width) array, got ndim " + std::to_string(a.ndim()));
    const Shape s{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2))};
    return Tensor(s, std::span<const float>(a.data(), static_cast<std::size_t>(a.size())));
}

FloatArray to_array(const Tensor& t)
{
    FloatArray out({t.channels(), t.height(), t.width()});
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

Image to_image(const FloatArray& a)
{
    return Image(to_tensor(a));
}

// Calls a loss with a gradient slot and returns (value, gradient).
template <class Fn>
py::tuple with_grad(Fn fn)
{
    Tensor g;
    const double v = fn(&g);
    return py::make_tuple(v, to_array(g));
}

// Runs a long computation without holding the GIL.
template <class Fn>
auto released(Fn fn)
{
    py::gil_scoped_release release;
    return fn();
}

}  // namespace

PYBIND11_MODULE(_styler, m)
{
    m.doc() = "Coarse-to-fine style transfer core";

    static py::exception<Error> base(m, "StylerError");
    static py::exception<InvalidInput> invalid(m, "InvalidInput", base.ptr());
    static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
    static py::exception<IoError> io(m, "IoError", base.ptr());
    static py::exception<NumericError> numeric(m, "NumericError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InvalidInput& e) {
            py::set_error(invalid, e.what());
        } catch (const ConfigError& e) {
            py::set_error(config, e.what());
        } catch (const IoError& e) {
            py::set_error(io, e.what());
        } catch (const NumericError& e) {
            py::set_error(numeric, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    m.def(
        "whiten", [](const FloatArray& f, double floor) { return to_array(whiten(to_tensor(f), {floor})); },
        py::arg("feature"), py::arg("eig_floor") = 1e-5);
    m.def(
        "color", [](const FloatArray& w, const FloatArray& s, double floor) {
            return to_array(color(to_tensor(w), to_tensor(s), {floor}));
        },
        py::arg("whitened"), py::arg("style"), py::arg("eig_floor") = 1e-5);
    m.def(
        "wct", [](const FloatArray& c, const FloatArray& s, double floor) {
            return to_array(wct_transform(to_tensor(c), to_tensor(s), {floor}));
        },
        py::arg("content"), py::arg("style"), py::arg("eig_floor") = 1e-5);

    m.def(
        "cost_matrix", [](const FloatArray& s, const FloatArray& x) { return cost_matrix(to_tensor(s), to_tensor(x)); },
        py::arg("f_s"), py::arg("f_cs"));
    m.def(
        "remd_loss", [](const FloatArray& s, const FloatArray& x, int max_samples, std::uint64_t seed) {
            const Tensor ts = to_tensor(s);
            const Tensor tx = to_tensor(x);
            return with_grad([&](Tensor* g) { return remd_loss(ts, tx, {max_samples, seed}, g); });
        },
        py::arg("f_s"), py::arg("f_cs"), py::arg("max_samples") = 1024, py::arg("seed") = 0,
        "Relaxed EMD value and its gradient with respect to f_cs.");
    m.def(
        "perceptual_loss", [](const FloatArray& c, const FloatArray& x) {
            const Tensor tc = to_tensor(c);
            const Tensor tx = to_tensor(x);
            return with_grad([&](Tensor* g) { return perceptual_loss(tc, tx, g); });
        },
        py::arg("f_c"), py::arg("f_cs"));
    m.def(
        "gram_loss", [](const FloatArray& s, const FloatArray& x) {
            const Tensor ts = to_tensor(s);
            const Tensor tx = to_tensor(x);
            return with_grad([&](Tensor* g) { return gram_loss(ts, tx, g); });
        },
        py::arg("f_s"), py::arg("f_cs"));
    m.def(
        "meanvar_loss", [](const FloatArray& s, const FloatArray& x) {
            const Tensor ts = to_tensor(s);
            const Tensor tx = to_tensor(x);
            return with_grad([&](Tensor* g) { return meanvar_loss(ts, tx, g); });
        },
        py::arg("f_s"), py::arg("f_cs"));

    m.def(
        "ssim", [](const FloatArray& a, const FloatArray& b) { return ssim(to_image(a), to_image(b)); }, py::arg("a"),
        py::arg("b"));
    m.def(
        "load_image", [](const std::filesystem::path& p) { return to_array(load_image(p).tensor()); }, py::arg("path"));
    m.def(
        "save_image", [](const FloatArray& img, const std::filesystem::path& p) { save_image(to_image(img), p); },
        py::arg("image"), py::arg("path"));

    m.def(
        "read_archive", [](const std::filesystem::path& p) {
            const TensorArchive a = TensorArchive::load(p);
            py::dict tensors;
            for (const auto& [name, e] : a.tensors()) {
                py::array_t<float> arr(e.shape);
                std::copy(e.values.begin(), e.values.end(), arr.mutable_data());
                tensors[py::str(name)] = arr;
            }
            return py::make_tuple(tensors, a.metadata());
        },
        py::arg("path"), "Reads an NTA1 archive as (tensors, metadata).");
    m.def(
        "write_archive",
        [](const std::filesystem::path& p, const std::map<std::string, FloatArray>& tensors,
           const std::map<std::string, std::string>& metadata) {
            TensorArchive a;
            for (const auto& [name, arr] : tensors) {
                std::vector<std::int64_t> shape(arr.shape(), arr.shape() + arr.ndim());
                a.put(name, std::move(shape), std::vector<float>(arr.data(), arr.data() + arr.size()));
            }
            for (const auto& [k, v] : metadata) a.set_meta(k, v);
            a.save(p);
        },
        py::arg("path"), py::arg("tensors"), py::arg("metadata") = std::map<std::string, std::string>{});

    m.def(
        "train_coarse", [](const std::filesystem::path& config) {
            const TrainResult r = released([&] { return train_coarse(load_config(config)); });
            return py::make_tuple(r.checkpoint, r.loss_csv);
        },
        py::arg("config"));
    m.def(
        "train_fine", [](const std::filesystem::path& config, const std::filesystem::path& coarse) {
            const TrainResult r = released([&] { return train_fine(load_config(config), coarse); });
            return py::make_tuple(r.checkpoint, r.loss_csv);
        },
        py::arg("config"), py::arg("coarse"));
    m.def(
        "make_toy_data", &make_toy_data, py::arg("root"), py::arg("count"), py::arg("size"), py::arg("seed") = 0);

    py::class_<Stylizer>(m, "Stylizer")
        .def_static("load", &Stylizer::load, py::arg("coarse"), py::arg("fine"))
        .def_static("load_coarse", &Stylizer::load_coarse, py::arg("coarse"))
        .def_static("fresh_toy", &Stylizer::fresh_toy, py::arg("seed") = 0)
        .def(
            "stylize", [](const Stylizer& s, const FloatArray& c, const FloatArray& st) {
                return to_array(s.stylize(to_image(c), to_image(st)).tensor());
            },
            py::arg("content"), py::arg("style"))
        .def(
            "stylize_coarse", [](const Stylizer& s, const FloatArray& c, const FloatArray& st) {
                return to_array(s.stylize_coarse(to_image(c), to_image(st)).tensor());
            },
            py::arg("content"), py::arg("style"));

    py::class_<BenchResult>(m, "BenchResult")
        .def_readonly("n", &BenchResult::n)
        .def_readonly("size", &BenchResult::size)
        .def_readonly("mean_seconds", &BenchResult::mean_seconds)
        .def_readonly("std_seconds", &BenchResult::std_seconds)
        .def_readonly("samples", &BenchResult::samples)
        .def_readonly("hardware", &BenchResult::hardware);
    m.def("bench", &bench_stylize, py::arg("coarse") = std::nullopt, py::arg("fine") = std::nullopt,
          py::arg("n") = 100, py::arg("size") = 512);
}
