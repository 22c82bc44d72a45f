#include "pipeline.hpp"
#include "service.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ttag;

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

NodeRef make_ref(const TemporalGraph& g, const std::string& type, uint64_t id) {
    return {g.type_id(type), id};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "temporal text-attributed graph matching core";

    py::register_exception<Error>(m, "TtagError");

    py::class_<TemporalGraph>(m, "TemporalGraph")
        .def_property_readonly("num_nodes", &TemporalGraph::num_nodes)
        .def_property_readonly("num_edges", &TemporalGraph::num_edges)
        .def_property_readonly("type_names", &TemporalGraph::type_names)
        .def_property_readonly("relation_names", &TemporalGraph::relation_names)
        .def("features_at",
             [](const TemporalGraph& g, const std::string& type, uint64_t id, double t) {
                 return to_std(g.features_at(make_ref(g, type, id), t));
             })
        .def("text_embedding_at",
             [](const TemporalGraph& g, const std::string& type, uint64_t id, double t) {
                 return to_std(g.text_embedding_at(make_ref(g, type, id), t));
             })
        .def("is_active",
             [](const TemporalGraph& g, const std::string& type, uint64_t id, double t) {
                 return g.is_active(make_ref(g, type, id), t);
             })
        .def("edges_before",
             [](const TemporalGraph& g, const std::string& type, uint64_t id,
                const std::string& relation, double t, size_t limit) {
                 auto edges = g.edges_before(make_ref(g, type, id), g.relation_id(relation), t,
                                             limit);
                 py::list out;
                 for (const auto& e : edges) {
                     py::dict d;
                     d["src_type"] = g.type_names()[e.src.type];
                     d["src_id"] = e.src.id;
                     d["dst_type"] = g.type_names()[e.dst.type];
                     d["dst_id"] = e.dst.id;
                     d["relation"] = g.relation_names()[e.relation];
                     d["timestamp"] = e.timestamp;
                     out.append(std::move(d));
                 }
                 return out;
             });

    m.def("load_store", [](const std::string& dir) { return load_store(dir); });

    m.def("sample_subgraph",
          [](const TemporalGraph& g, const std::string& type, uint64_t id, double as_of,
             size_t hops, size_t per_relation_limit, bool temporal_edges,
             bool temporal_features) {
              SamplerSpec spec{hops, per_relation_limit, temporal_edges, temporal_features};
              Subgraph sg = sample_subgraph(g, make_ref(g, type, id), as_of, spec);
              py::dict out;
              py::list nodes;
              for (const auto& n : sg.nodes) {
                  py::dict d;
                  d["type"] = g.type_names()[n.ref.type];
                  d["id"] = n.ref.id;
                  d["hop"] = n.hop;
                  d["numeric"] = to_std(n.numeric);
                  d["text"] = to_std(n.text);
                  nodes.append(std::move(d));
              }
              out["nodes"] = nodes;
              py::list edges;
              for (const auto& e : sg.edges) {
                  py::dict d;
                  d["src_type"] = g.type_names()[e.src.type];
                  d["src_id"] = e.src.id;
                  d["dst_type"] = g.type_names()[e.dst.type];
                  d["dst_id"] = e.dst.id;
                  d["relation"] = g.relation_names()[e.relation];
                  d["timestamp"] = e.timestamp;
                  edges.append(std::move(d));
              }
              out["edges"] = edges;
              return out;
          },
          py::arg("graph"), py::arg("type"), py::arg("id"), py::arg("as_of"),
          py::arg("hops") = 2, py::arg("per_relation_limit") = 10,
          py::arg("temporal_edges") = true, py::arg("temporal_features") = true);

    py::class_<DualEncoder>(m, "DualEncoder")
        .def_static("load", [](const std::string& path) { return DualEncoder::load(path); })
        .def("encode", [](const DualEncoder& e, const std::vector<uint32_t>& doc) {
            return to_std(e.encode(doc));
        });

    py::class_<GraphModel>(m, "GraphModel")
        .def_static("load", [](const std::string& path) { return GraphModel::load(path); })
        .def("embed_node",
             [](const GraphModel& gm, const TemporalGraph& g, const std::string& type,
                uint64_t id, double t) {
                 return to_std(gm.embed_node(g, make_ref(g, type, id), t));
             });

    m.def("ndcg_at_k",
          [](const std::vector<uint64_t>& ranked, const std::vector<uint64_t>& relevant,
             size_t k) {
              std::vector<NodeRef> r;
              for (uint64_t id : ranked) r.push_back({0, id});
              std::set<NodeRef> rel;
              for (uint64_t id : relevant) rel.insert({0, id});
              return ndcg_at_k(r, rel, k);
          });

    // Pipeline stages; JSON configs travel as strings.
    m.def("generate", [](const std::string& config_json, const std::string& out_dir) {
        generate(WorldConfig::from_json(json::parse(config_json)), out_dir);
    });
    m.def("describe", [](const std::string& dir) { return describe(dir).dump(); });
    m.def("stage_train_text",
          [](const std::string& dataset, const std::string& config_json,
             const std::string& model_out) {
              TextModelConfig cfg;
              json j = json::parse(config_json);
              cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
              cfg.dim = j.value("dim", cfg.dim);
              cfg.temperature = j.value("temperature", cfg.temperature);
              cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
              cfg.batch_size = j.value("batch_size", cfg.batch_size);
              cfg.epochs = j.value("epochs", cfg.epochs);
              cfg.max_hard_negatives = j.value("max_hard_negatives", cfg.max_hard_negatives);
              cfg.seed = j.value("seed", cfg.seed);
              return stage_train_text(dataset, cfg, model_out).dump();
          });
    m.def("stage_embed_all",
          [](const std::string& dataset, const std::string& model, const std::string& out) {
              return stage_embed_all(dataset, model, out).dump();
          });
    m.def("stage_mine",
          [](const std::string& dataset, const std::string& params_json, size_t random_per_label,
             const std::string& out_file) {
              json j = json::parse(params_json);
              MiningParams p;
              p.ann_candidates = j.value("ann_candidates", p.ann_candidates);
              p.negatives_per_positive = j.value("negatives_per_positive",
                                                 p.negatives_per_positive);
              p.sigma_low = j.value("sigma_low", p.sigma_low);
              p.sigma_high = j.value("sigma_high", p.sigma_high);
              p.rng_seed = j.value("rng_seed", p.rng_seed);
              return stage_mine(dataset, p, random_per_label, true, true, out_file).dump();
          });
    m.def("stage_train_graph",
          [](const std::string& dataset, const std::string& config_json,
             const std::string& quints, const std::string& model_out) {
              return stage_train_graph(dataset, ModelConfig::from_json(json::parse(config_json)),
                                       quints, model_out)
                  .dump();
          });
    m.def("stage_eval", [](const std::string& dataset, const std::string& checkpoint) {
        EvalConfig cfg;
        return stage_eval(dataset, checkpoint, cfg).to_json().dump();
    });
}
