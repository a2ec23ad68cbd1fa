#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "medgrad/checkpoint.hpp"
#include "medgrad/cli.hpp"
#include "medgrad/entropy.hpp"
#include "medgrad/eval.hpp"
#include "medgrad/png.hpp"
#include "medgrad/render.hpp"
#include "medgrad/saliency.hpp"
#include "medgrad/synthdata.hpp"

namespace py = pybind11;
using namespace medgrad;

namespace {

Image image_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw DimensionError("image array must have shape (H, W, 3)");
    Image img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy_n(arr.data(), img.data.size(), img.data.data());
    return img;
}

py::array_t<float> array_from_image(const Image& img) {
    py::array_t<float> arr({img.height, img.width, 3});
    std::copy_n(img.data.data(), img.data.size(), arr.mutable_data());
    return arr;
}

py::array_t<float> array_from_map(const SaliencyMap& map) {
    py::array_t<float> arr({map.rows, map.cols});
    std::copy_n(map.values.data(), map.values.size(), arr.mutable_data());
    return arr;
}

py::array_t<float> embedding_array(const Tensorf& t) {
    py::array_t<float> arr(std::vector<py::ssize_t>{static_cast<py::ssize_t>(t.size())});
    std::copy_n(t.data.data(), t.size(), arr.mutable_data());
    return arr;
}

SaliencyMap run_method(const ClipBundle& bundle, const Image& img, const TokenSeq& tokens,
                       const std::string& method, const ExplainConfig& config) {
    switch (method_from_name(method)) {
        case SaliencyMethod::MedGradEclip: return medgrad_eclip(bundle.model, img, tokens, config);
        case SaliencyMethod::GradEclip: return grad_eclip(bundle.model, img, tokens);
        case SaliencyMethod::GradCam: return grad_cam(bundle.model, img, tokens);
    }
    throw ContractError("unreachable");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "CLIP-style dermoscopy toy model with entropy-weighted gradient saliency";

    py::register_exception<Error>(m, "MedgradError");

    py::class_<ExplainConfig>(m, "ExplainConfig")
        .def(py::init<>())
        .def_readwrite("disk_radius", &ExplainConfig::disk_radius)
        .def_readwrite("bins", &ExplainConfig::bins)
        .def_readwrite("overlay_alpha", &ExplainConfig::overlay_alpha);

    py::class_<ClipBundle>(m, "Model")
        .def_static("load", &load_checkpoint, py::arg("path"))
        .def("save", [](const ClipBundle& b, const std::string& path) { save_checkpoint(b, path); })
        .def_property_readonly("class_names",
                               [](const ClipBundle& b) {
                                   std::vector<std::string> names;
                                   for (const auto& c : b.classes) names.push_back(c.name);
                                   return names;
                               })
        .def_property_readonly("image_size",
                               [](const ClipBundle& b) { return b.model.cfg.image_size; })
        .def_property_readonly("embed_dim",
                               [](const ClipBundle& b) { return b.model.cfg.embed_dim; })
        .def_property_readonly("params_hash",
                               [](const ClipBundle& b) { return b.model.params_hash(); })
        .def("encode_image",
             [](const ClipBundle& b, const py::array_t<float, py::array::c_style |
                                                                   py::array::forcecast>& arr) {
                 return embedding_array(encode_image(b.model, image_from_array(arr)).first);
             },
             py::arg("image"))
        .def("encode_text",
             [](const ClipBundle& b, const std::string& caption) {
                 const auto tokens = b.vocab.encode(
                     caption, static_cast<std::size_t>(b.model.cfg.context_length));
                 return embedding_array(encode_text(b.model, tokens));
             },
             py::arg("caption"))
        .def("classify",
             [](const ClipBundle& b, const py::array_t<float, py::array::c_style |
                                                                  py::array::forcecast>& arr) {
                 return classify(b.model, image_from_array(arr), b.prompt_tokens());
             },
             py::arg("image"))
        .def("explain",
             [](const ClipBundle& b,
                const py::array_t<float, py::array::c_style | py::array::forcecast>& arr,
                const std::string& caption, const std::string& method,
                const ExplainConfig& config) {
                 const auto tokens = b.vocab.encode(
                     caption, static_cast<std::size_t>(b.model.cfg.context_length));
                 return array_from_map(
                     run_method(b, image_from_array(arr), tokens, method, config));
             },
             py::arg("image"), py::arg("caption"), py::arg("method") = "medgrad-eclip",
             py::arg("config") = ExplainConfig{});

    m.def("generate_dataset",
          [](const std::string& out_dir, int n_pairs, int k_classes, std::uint64_t seed,
             int image_size, unsigned threads) {
              Dataset ds = generate_dataset(n_pairs, k_classes, seed, image_size, 32, threads);
              save_dataset(ds, out_dir, threads);
              return ds.items.size();
          },
          py::arg("out_dir"), py::arg("n_pairs") = 800, py::arg("k_classes") = 8,
          py::arg("seed") = 42, py::arg("image_size") = 64, py::arg("threads") = 1);

    m.def("local_entropy",
          [](const py::array_t<float, py::array::c_style | py::array::forcecast>& gray,
             int radius, int bins, bool fast) {
              if (gray.ndim() != 2) throw DimensionError("gray array must be 2-d");
              std::vector<float> data(gray.data(), gray.data() + gray.size());
              const int h = static_cast<int>(gray.shape(0));
              const int w = static_cast<int>(gray.shape(1));
              const EntropyMap map = fast ? local_entropy_fast(data, h, w, radius, bins)
                                          : local_entropy_ref(data, h, w, radius, bins);
              py::array_t<float> out({h, w});
              std::copy_n(map.values.data(), map.values.size(), out.mutable_data());
              return out;
          },
          py::arg("gray"), py::arg("radius") = 5, py::arg("bins") = 32, py::arg("fast") = true);

    m.def("read_image",
          [](const std::string& path) { return array_from_image(png_decode_image(read_file(path))); },
          py::arg("path"));

    m.def("run_cli", &run_cli, py::arg("args"),
          "invoke the command-line interface (gen-data/train/eval/explain/compare)");
}
