#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fgcard/error.hpp"
#include "fgcard/factorgraph.hpp"
#include "fgcard/model.hpp"
#include "fgcard/model_io.hpp"
#include "fgcard/oracle.hpp"

namespace py = pybind11;
using namespace fgcard;

namespace {

RunConfig make_config(std::optional<int> k, const std::string &strategy, const std::string &estimator, double rate,
                      uint64_t seed, const std::map<int, int> &overrides) {
	RunConfig c;
	c.total_bins = k;
	c.strategy = bin_strategy_from_string(strategy);
	c.estimator = estimator_kind_from_string(estimator);
	c.rate = rate;
	c.seed = seed;
	c.group_overrides = overrides;
	return c;
}

EstimateOptions options(bool explain) {
	EstimateOptions o;
	o.explain = explain;
	return o;
}

} // namespace

PYBIND11_MODULE(_core, m) {
	m.doc() = "Factor-graph join cardinality estimation";

	auto base = py::register_exception<Error>(m, "Error");
	py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
	py::register_exception<DataError>(m, "DataError", base.ptr());
	py::register_exception<ParseError>(m, "ParseError", base.ptr());
	py::register_exception<EstimationError>(m, "EstimationError", base.ptr());

	py::class_<Database>(m, "Database")
	    .def_static(
	        "load",
	        [](const std::filesystem::path &schema, const std::filesystem::path &data) {
		        return load_database(load_schema_file(schema), data);
	        },
	        py::arg("schema"), py::arg("data"))
	    .def_static(
	        "generate", [](const std::string &spec) { return generate_db(SyntheticSpec::from_json(nlohmann::json::parse(spec))); },
	        py::arg("spec_json"))
	    .def_static("star", [](int dims, uint64_t rows, uint64_t dim_rows, double skew,
	                           uint64_t seed) { return generate_db(star_spec(dims, rows, dim_rows, skew, seed)); },
	                py::arg("dimensions"), py::arg("rows"), py::arg("dim_rows"), py::arg("skew"), py::arg("seed"))
	    .def_static("chain", [](int tables, uint64_t rows, double skew,
	                            uint64_t seed) { return generate_db(chain_spec(tables, rows, skew, seed)); },
	                py::arg("tables"), py::arg("rows"), py::arg("skew"), py::arg("seed"))
	    .def("write", [](const Database &db, const std::filesystem::path &dir) { write_database(db, dir); })
	    .def_property_readonly("tables",
	                           [](const Database &db) {
		                           std::map<std::string, size_t> rows;
		                           for (auto &t : db.tables) {
			                           rows[t.def.name] = t.num_rows();
		                           }
		                           return rows;
	                           })
	    .def("schema_json", [](const Database &db) { return db.catalog.to_json().dump(); })
	    .def(
	        "exact_cardinality",
	        [](const Database &db, const std::string &query) { return exact_cardinality(parse_query(query, db.catalog), db); },
	        py::arg("query"))
	    .def(
	        "workload",
	        [](const Database &db, size_t queries, int min_aliases, int max_aliases, uint64_t seed) {
		        WorkloadSpec ws;
		        ws.queries = queries;
		        ws.min_aliases = min_aliases;
		        ws.max_aliases = max_aliases;
		        ws.seed = seed;
		        std::vector<std::string> out;
		        for (auto &q : generate_workload(db, ws)) {
			        out.push_back(q.to_sql());
		        }
		        return out;
	        },
	        py::arg("queries"), py::arg("min_aliases") = 2, py::arg("max_aliases") = 4, py::arg("seed") = 1);

	py::class_<Model>(m, "Model")
	    .def_static("load", [](const std::filesystem::path &path) { return load_model(path); }, py::arg("path"))
	    .def_static(
	        "from_bytes", [](const py::bytes &data) { return deserialize_model(std::string(data)); }, py::arg("data"))
	    .def("save", [](const Model &model, const std::filesystem::path &path) { save_model(model, path); })
	    .def("to_bytes", [](const Model &model) { return py::bytes(serialize_model(model)); })
	    .def_property_readonly("bin_budget", &Model::bin_budget)
	    .def_property_readonly("bins",
	                           [](const Model &model) {
		                           std::map<int, int> out;
		                           for (auto &[g, b] : model.bins) {
			                           out[g] = b.num_bins();
		                           }
		                           return out;
	                           })
	    .def(
	        "estimate_json",
	        [](const Model &model, const std::string &query, bool explain) {
		        py::gil_scoped_release release;
		        return estimate(parse_query(query, model.catalog), model, options(explain)).to_json().dump();
	        },
	        py::arg("query"), py::arg("explain") = false)
	    .def(
	        "subplans_json",
	        [](const Model &model, const std::string &query, std::optional<size_t> cap) {
		        py::gil_scoped_release release;
		        auto q = parse_query(query, model.catalog);
		        auto res = progressive_estimate(q, model, cap.value_or(model.config.subplan_cap));
		        nlohmann::json out = nlohmann::json::array();
		        for (auto &r : res.reports) {
			        out.push_back(r.to_json());
		        }
		        return nlohmann::json {{"reports", out}, {"truncated", res.truncated}, {"wall_ms", res.wall_ms}}.dump();
	        },
	        py::arg("query"), py::arg("cap") = py::none())
	    .def(
	        "update",
	        [](Model &model, const std::filesystem::path &delta_dir) { update(model, load_deltas(model.catalog, delta_dir)); },
	        py::arg("delta_dir"));

	m.def(
	    "train",
	    [](const Database &db, std::optional<int> k, const std::string &strategy, const std::string &estimator,
	       double rate, uint64_t seed, const std::map<int, int> &overrides) {
		    auto config = make_config(k, strategy, estimator, rate, seed, overrides);
		    py::gil_scoped_release release;
		    return train(db, config);
	    },
	    py::arg("db"), py::arg("k") = py::none(), py::arg("strategy") = "gbsa", py::arg("estimator") = "chowliu",
	    py::arg("rate") = 0.01, py::arg("seed") = 42, py::arg("overrides") = std::map<int, int> {});
	m.attr("MODEL_FORMAT_VERSION") = MODEL_FORMAT_VERSION;
}
