#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "asnet/coarse_losses.hpp"
#include "asnet/config.hpp"
#include "asnet/data_io.hpp"
#include "asnet/densitygen.hpp"
#include "asnet/fine_scoring.hpp"
#include "asnet/metrics.hpp"
#include "asnet/objective.hpp"
#include "asnet/trainer.hpp"

namespace py = pybind11;
using namespace asnet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Field2D to_field(const Array& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    return Field2D(h, w, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Field2D& f) {
    Array a({f.height(), f.width()});
    std::copy(f.values().begin(), f.values().end(), a.mutable_data());
    return a;
}

py::array_t<std::uint8_t> to_array(const BinaryMap& m) {
    py::array_t<std::uint8_t> a({m.height, m.width});
    std::copy(m.values.begin(), m.values.end(), a.mutable_data());
    return a;
}

BinaryMap to_binary(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    BinaryMap m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.values.begin());
    return m;
}

std::vector<Field2D> to_fields(const Array& a) {
    if (a.ndim() == 2) return {to_field(a)};
    if (a.ndim() != 3) throw std::invalid_argument("expected a 2-D or 3-D array");
    const auto n = a.shape(0);
    const auto h = static_cast<int>(a.shape(1));
    const auto w = static_cast<int>(a.shape(2));
    std::vector<Field2D> out;
    const double* p = a.data();
    for (py::ssize_t i = 0; i < n; ++i, p += h * w) out.emplace_back(h, w, std::vector<double>(p, p + h * w));
    return out;
}

Tensor<double> to_tensor(const Array& a) { return from_fields<double>(to_fields(a)); }

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

PointAnnotation annotation(const Array& points, int height, int width) {
    PointAnnotation ann{{}, height, width};
    if (points.size() > 0) {
        if (points.ndim() != 2 || points.shape(1) != 2) throw std::invalid_argument("points must have shape (n, 2)");
        for (py::ssize_t i = 0; i < points.shape(0); ++i) ann.points.push_back({points.at(i, 0), points.at(i, 1)});
    }
    return ann;
}

TrainConfig make_config(const std::string& preset, const py::object& overrides) {
    TrainConfig cfg = preset == "toy" ? TrainConfig::toy() : TrainConfig{};
    if (!overrides.is_none()) cfg = apply_json(cfg, py_to_json(overrides));
    cfg.validate();
    return cfg;
}

Image to_image(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("image must have shape (h, w, 3)");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    Image img(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = a.at(y, x, c);
    return img;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Density-map crowd counting with adversarial scoring";

    py::class_<ScoreSet>(m, "ScoreSet")
        .def_readonly("s_img", &ScoreSet::s_img)
        .def_readonly("s_patch", &ScoreSet::s_patch)
        .def_property_readonly("s_pix", [](const ScoreSet& s) { return to_array(s.s_pix); })
        .def_property_readonly("s_ppx", [](const ScoreSet& s) { return to_array(s.s_ppx); });

    m.def(
        "points_to_density",
        [](const Array& points, int height, int width, double sigma, bool adaptive, double truncation) {
            KernelSpec spec;
            spec.mode = adaptive ? KernelMode::geometry_adaptive : KernelMode::fixed;
            spec.sigma = sigma;
            spec.truncation = truncation;
            return to_array(points_to_density(annotation(points, height, width), spec));
        },
        py::arg("points"), py::arg("height"), py::arg("width"), py::arg("sigma") = 4.0, py::arg("adaptive") = false,
        py::arg("truncation") = 4.0, "Density map from (x, y) points; sums to the point count.");
    m.def("downsample", [](const Array& map, int factor) { return to_array(downsample_count_preserving(to_field(map), factor)); },
          py::arg("map"), py::arg("factor"));

    m.def(
        "discriminator_loss",
        [](const Array& o_source, const Array& o_target, int batch_images) {
            return discriminator_loss(to_fields(o_source), to_fields(o_target), batch_images);
        },
        py::arg("o_source"), py::arg("o_target"), py::arg("batch_images") = 0);
    m.def(
        "adversarial_loss", [](const Array& o_target, int batch_images) { return adversarial_loss(to_fields(o_target), batch_images); },
        py::arg("o_target"), py::arg("batch_images") = 0);

    m.def(
        "compute_scores",
        [](const Array& o1, const Array& o2, int height, int width, int s, const std::string& patch_rule) {
            ScoreRules rules;
            rules.patch_rule = parse_patch_rule(patch_rule);
            return compute_scores(to_field(o1), to_fields(o2), height, width, s, rules);
        },
        py::arg("o1"), py::arg("o2"), py::arg("height"), py::arg("width"), py::arg("s"),
        py::arg("patch_rule") = "fixed");
    m.def(
        "pixel_weights",
        [](const ScoreSet& scores, int height, int width, int s, bool residual) {
            const auto w = pixel_weights(scores, height, width, s, residual);
            return to_array(Field2D(height, width, w));
        },
        py::arg("scores"), py::arg("height"), py::arg("width"), py::arg("s"), py::arg("residual") = true);
    m.def("density_loss", [](const Array& pred, const Array& gt) { return density_loss(to_tensor(pred), to_tensor(gt)); },
          py::arg("pred"), py::arg("gt"));
    m.def(
        "weighted_density_loss",
        [](const Array& pred, const Array& gt, const std::vector<ScoreSet>& scores, int s, bool residual) {
            return weighted_density_loss(to_tensor(pred), to_tensor(gt), scores, s, residual);
        },
        py::arg("pred"), py::arg("gt"), py::arg("scores"), py::arg("s"), py::arg("residual") = true);

    m.def("game", [](const Array& pred, const Array& gt, int level) { return game(to_field(pred), to_field(gt), level); },
          py::arg("pred"), py::arg("gt"), py::arg("level"));
    m.def(
        "mae_mse",
        [](const std::vector<std::pair<double, double>>& counts) {
            std::vector<CountRecord> r;
            for (auto [p, g] : counts) r.push_back({p, g});
            const CountErrors e = mae_mse(r);
            return std::pair{e.mae, e.mse};
        },
        py::arg("counts"), "MAE and root-mean-squared error of (predicted, ground truth) count pairs.");
    m.def("apply_roi", [](const Array& map, const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& roi) {
        return to_array(apply_roi(to_field(map), to_binary(roi)));
    });

    m.def(
        "synth",
        [](const std::string& out, int n_source, int n_target, int n_test, int height, int width, std::uint64_t seed) {
            SynthSpec spec;
            spec.height = height;
            spec.width = width;
            spec.seed = seed;
            const std::filesystem::path root(out);
            synth_dataset(spec, n_source, Domain::source, root / "source" / "train");
            spec.seed = seed + 1;
            synth_dataset(spec, n_target, Domain::target, root / "target" / "train");
            spec.seed = seed + 2;
            synth_dataset(spec, n_test, Domain::target, root / "target" / "test");
        },
        py::arg("out"), py::arg("n_source") = 32, py::arg("n_target") = 32, py::arg("n_test") = 8, py::arg("height") = 64,
        py::arg("width") = 64, py::arg("seed") = 1);

    m.def(
        "config", [](const std::string& preset, const py::object& overrides) { return json_to_py(to_json(make_config(preset, overrides))); },
        py::arg("preset") = "paper", py::arg("overrides") = py::none());
    m.def(
        "train",
        [](const std::string& source, const std::string& target, const py::object& out, const std::string& preset,
           const py::object& overrides) {
            const TrainConfig cfg = make_config(preset, overrides);
            const Dataset src = Dataset::open(source, "train", true);
            const Dataset tgt = Dataset::open(target, "train", false);
            Dataset test;
            TrainRunOptions opt;
            if (std::filesystem::exists(std::filesystem::path(target) / "test" / "images")) {
                test = Dataset::open(target, "test", true);
                opt.eval_set = &test;
            }
            if (!out.is_none()) opt.out_dir = std::filesystem::path(out.cast<std::string>());
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(cfg, src, tgt, opt);
            }
            nlohmann::json j{{"steps", r.steps}};
            if (r.final_metrics) j["metrics"] = to_json(*r.final_metrics);
            return json_to_py(j);
        },
        py::arg("source"), py::arg("target"), py::arg("out") = py::none(), py::arg("preset") = "paper",
        py::arg("overrides") = py::none(), "Trains from <source>/train and <target>/train; returns steps and metrics.");
    m.def(
        "evaluate",
        [](const std::string& checkpoint, const std::string& data, const std::string& split) {
            auto ck = load_checkpoint<float>(checkpoint);
            const Dataset ds = Dataset::open(data, split, true);
            return json_to_py(to_json(evaluate(ck.model.g, ds, eval_options(ck.config))));
        },
        py::arg("checkpoint"), py::arg("data"), py::arg("split") = "test");
    m.def(
        "predict_density",
        [](const std::string& checkpoint, const py::array_t<float, py::array::c_style | py::array::forcecast>& image) {
            auto ck = load_checkpoint<float>(checkpoint);
            const EvalOptions opt = eval_options(ck.config);
            return to_array(predict_density(ck.model.g, to_image(image), opt.pad_multiple, opt.density_scale));
        },
        py::arg("checkpoint"), py::arg("image"), "Full-resolution density for an (h, w, 3) image in [0, 1].");
}
