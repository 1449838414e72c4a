#include "hqfnn/analysis.hpp"
#include "hqfnn/cli.hpp"
#include "hqfnn/data.hpp"
#include "hqfnn/errors.hpp"
#include "hqfnn/model.hpp"
#include "hqfnn/trainer.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace hqfnn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
    return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    Array out(t.shape());
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

qsim::PureState to_state(const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& a) {
    qsim::PureState s;
    const auto n = static_cast<std::size_t>(a.size());
    if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("state length must be a power of two");
    while ((std::size_t{1} << s.n_qubits) < n) ++s.n_qubits;
    s.amplitudes.assign(a.data(), a.data() + n);
    return s;
}

}  // namespace

PYBIND11_MODULE(_hqfnn, m) {
    m.doc() = "Hybrid quantum-fuzzy classifier core";

    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_ValueError);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("d", &ModelConfig::d)
        .def_readwrite("m", &ModelConfig::m)
        .def_readwrite("layers", &ModelConfig::layers)
        .def_readwrite("q", &ModelConfig::q)
        .def_readwrite("p", &ModelConfig::p)
        .def_readwrite("hidden", &ModelConfig::hidden)
        .def_readwrite("n_classes", &ModelConfig::n_classes)
        .def_readwrite("image_size", &ModelConfig::image_size)
        .def("validate", &ModelConfig::validate);

    py::class_<ModelParams>(m, "ModelParams")
        .def_readonly("config", &ModelParams::config)
        .def("parameter_count", &ModelParams::parameter_count)
        .def("tensors", [](const ModelParams& p) {
            py::dict out;
            for (const auto* t : p.tensors()) {
                Array a(t->shape);
                std::copy(t->values.begin(), t->values.end(), a.mutable_data());
                out[py::str(t->name)] = a;
            }
            return out;
        });

    m.def("init_params", &init_params, py::arg("config"), py::arg("seed") = 0);
    m.def("forward", [](const ModelParams& p, const Array& images) { return to_array(model_forward(to_tensor(images), p)); },
          py::arg("params"), py::arg("images"), "images [B][1][S][S] -> logits [B][classes]");
    m.def("loss_and_grad",
          [](ModelParams& p, const Array& images, const std::vector<std::size_t>& labels) {
              const auto r = model_loss_and_grad(p, to_tensor(images), labels);
              py::dict grads;
              for (const auto* t : p.tensors()) {
                  Array a(t->shape);
                  std::copy(t->grad.begin(), t->grad.end(), a.mutable_data());
                  grads[py::str(t->name)] = a;
              }
              return py::make_tuple(r.loss, grads);
          },
          py::arg("params"), py::arg("images"), py::arg("labels"));
    m.def("qmf_membership",
          [](double x, const std::vector<double>& biases, const std::vector<double>& thetas) {
              const std::size_t layers = biases.size() / 3;
              if (biases.size() != 3 * layers || thetas.size() != biases.size()) {
                  throw std::invalid_argument("biases and thetas must both hold 3 * layers angles");
              }
              QmfParams p;
              p.m = 1;
              p.layers = layers;
              p.biases = ParamTensor("qmf_bias", {1, layers, 3});
              p.thetas = ParamTensor("qmf_theta", {1, layers, 3});
              p.biases.values = biases;
              p.thetas.values = thetas;
              return qmf_membership(x, 0, p);
          },
          py::arg("x"), py::arg("biases"), py::arg("thetas"));
    m.def("save_checkpoint", &save_checkpoint);
    m.def("load_checkpoint", &load_checkpoint);

    m.def("meyer_wallach", [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& a) {
        return qsim::meyer_wallach(to_state(a));
    });
    m.def("noise_sweep",
          [](const std::string& channel, const std::vector<double>& probabilities, std::size_t n_inputs,
             std::size_t layers, std::uint64_t seed) {
              NoiseSweepConfig cfg{layers, n_inputs, seed};
              py::list out;
              for (const auto& r : noise_sweep(qsim::parse_channel(channel), probabilities, cfg)) {
                  py::dict d;
                  d["P"] = r.probability;
                  d["mean_fidelity"] = r.mean_fidelity;
                  d["fidelities"] = r.fidelities;
                  out.append(d);
              }
              return out;
          },
          py::arg("channel"), py::arg("probabilities"), py::arg("n_inputs") = 50, py::arg("layers") = 4,
          py::arg("seed") = NoiseSweepConfig{}.seed);
    m.def("expr_ent",
          [](std::size_t layers, std::size_t q, std::size_t n_pairs, std::size_t n_bins, std::size_t n_samples,
             std::uint64_t seed) {
              const auto r = expr_ent({layers, q, n_pairs, n_bins, n_samples, seed});
              return py::make_tuple(r.expressibility, r.entanglement);
          },
          py::arg("layers") = 4, py::arg("q") = 6, py::arg("n_pairs") = 5000, py::arg("n_bins") = 75,
          py::arg("n_samples") = 1000, py::arg("seed") = ExprEntConfig{}.seed);
    m.def("haar_bin_masses", &haar_bin_masses);
    m.def("kl_divergence", [](const std::vector<double>& p, const std::vector<double>& q) { return kl_divergence(p, q); });
    m.def("gate_counts", [](const ModelConfig& c) {
        const auto r = gate_count_report(c);
        py::dict d;
        d["qmf_single_qubit_gates"] = r.qmf_single_qubit_gates;
        d["qd_rx_gates"] = r.qd_rx_gates;
        d["qd_cluster_cnots"] = r.qd_cluster_cnots;
        d["qd_wraparound_cnots"] = r.qd_wraparound_cnots;
        d["total_params"] = r.total_params;
        return d;
    });

    m.def("load_idx",
          [](const std::filesystem::path& images, const std::filesystem::path& labels) {
              const Dataset ds = load_idx(images, labels);
              return py::make_tuple(to_array(ds.images), ds.labels, ds.stats.mean, ds.stats.std);
          },
          py::arg("images_path"), py::arg("labels_path"));

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int rc = run_cli(args, out, err);
        return py::make_tuple(rc, out.str(), err.str());
    });
}
