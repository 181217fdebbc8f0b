#include "fgcard/factorgraph.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "fgcard/error.hpp"

namespace fgcard {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
	return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<size_t> strides_of(const std::vector<int> &dims) {
	std::vector<size_t> s(dims.size(), 1);
	for (size_t i = dims.size(); i-- > 1;) {
		s[i - 1] = s[i] * static_cast<size_t>(dims[i]);
	}
	return s;
}

size_t checked_cells(const std::vector<int> &dims) {
	size_t n = 1;
	for (int d : dims) {
		if (d <= 0) {
			throw EstimationError("factor dimension must be positive");
		}
		if (n > MAX_TENSOR_CELLS / static_cast<size_t>(d)) {
			throw EstimationError("factor exceeds " + std::to_string(MAX_TENSOR_CELLS) + " cells");
		}
		n *= static_cast<size_t>(d);
	}
	return n;
}

//! Advances a row-major counter; returns false after the last configuration.
bool advance(std::vector<int> &digit, const std::vector<int> &dims) {
	for (size_t i = digit.size(); i-- > 0;) {
		if (++digit[i] < dims[i]) {
			return true;
		}
		digit[i] = 0;
	}
	return false;
}

std::string join_names(const std::vector<std::string> &names) {
	std::string out;
	for (auto &n : names) {
		if (!out.empty()) {
			out += ",";
		}
		out += n;
	}
	return out;
}

const Predicate *filter_of(const QueryIR &query, const std::string &alias) {
	auto it = query.filters.find(alias);
	return it == query.filters.end() ? nullptr : &it->second;
}

//! Factor of one alias over the given key columns, dimensions labelled `labels` (merged where labels repeat).
Factor base_factor(const Model &model, const QueryIR &query, const std::string &alias, const std::string &table,
                   const std::vector<std::string> &columns, const std::vector<int> &labels, int alias_index,
                   const EstimateOptions &options, BinRule rule, double *filtered_total) {
	const Predicate *filter = filter_of(query, alias);
	BinDistribution d;
	if (options.mass == MassSource::Conditional) {
		d = model.distribution(table, filter, columns, options.mfv);
	} else {
		d = model.distribution(table, nullptr, columns, MfvMode::Unconditioned);
		double all = d.filtered_total;
		double kept = filter ? model.distribution(table, filter, {}, MfvMode::Unconditioned).filtered_total : all;
		double sel = all > 0 ? kept / all : 0.0;
		for (auto &x : d.mass) {
			x *= sel;
		}
		d.filtered_total = kept;
	}
	if (rule == BinRule::Uniform) {
		for (size_t k = 0; k < columns.size(); ++k) {
			auto &s = model.summary(KeyRef {table, columns[k]});
			for (size_t b = 0; b + 1 < d.mfv[k].size(); ++b) {
				d.mfv[k][b] = static_cast<double>(s.ndv[b]);
			}
		}
	}
	if (filtered_total) {
		*filtered_total = d.filtered_total;
	}
	Factor f;
	f.vars.resize(columns.size());
	std::iota(f.vars.begin(), f.vars.end(), 0);
	f.dims = d.dims;
	f.mass = std::move(d.mass);
	f.mfv = std::move(d.mfv);
	f.aliases = uint64_t {1} << alias_index;
	if (columns.empty()) {
		return f;
	}
	return relabel(f, labels);
}

} // namespace

std::string_view to_string(JoinHistMode mode) {
	switch (mode) {
	case JoinHistMode::Classic:
		return "classic";
	case JoinHistMode::WithBound:
		return "with_bound";
	case JoinHistMode::WithConditional:
		return "with_conditional";
	}
	return "classic";
}

JoinHistMode joinhist_mode_from_string(std::string_view name) {
	if (name == "classic") {
		return JoinHistMode::Classic;
	}
	if (name == "with_bound") {
		return JoinHistMode::WithBound;
	}
	if (name == "with_conditional") {
		return JoinHistMode::WithConditional;
	}
	throw std::invalid_argument("unknown JoinHist mode '" + std::string(name) + "'");
}

double Factor::total() const {
	double s = 0;
	for (double x : mass) {
		s += x;
	}
	return s;
}

int Factor::position(int var) const {
	auto it = std::lower_bound(vars.begin(), vars.end(), var);
	return it != vars.end() && *it == var ? static_cast<int>(it - vars.begin()) : -1;
}

nlohmann::json Factor::to_json(size_t max_cells) const {
	nlohmann::json j;
	j["vars"] = vars;
	j["dims"] = dims;
	j["cells"] = mass.size();
	if (mass.size() <= max_cells) {
		j["mass"] = mass;
	} else {
		j["mass"] = std::vector<double>(mass.begin(), mass.begin() + static_cast<std::ptrdiff_t>(max_cells));
		j["truncated"] = true;
	}
	j["mfv"] = mfv;
	return j;
}

Factor join_factors(std::span<const Factor *const> factors, int pivot, bool keep_pivot, BinRule rule) {
	if (factors.empty()) {
		throw std::invalid_argument("join_factors needs at least one factor");
	}
	std::map<int, int> dim_of;
	std::map<int, int> count;
	for (auto *f : factors) {
		for (size_t j = 0; j < f->vars.size(); ++j) {
			auto [it, inserted] = dim_of.emplace(f->vars[j], f->dims[j]);
			if (!inserted && it->second != f->dims[j]) {
				throw EstimationError("inconsistent bin maps for variable " + std::to_string(f->vars[j]));
			}
			++count[f->vars[j]];
		}
		if (f->position(pivot) < 0) {
			throw std::invalid_argument("factor does not contain variable " + std::to_string(pivot));
		}
	}
	const size_t m = factors.size();
	const int nb = dim_of.at(pivot) - 1;

	std::vector<int> others, other_dims;
	std::vector<bool> shared;
	for (auto &[v, d] : dim_of) {
		if (v != pivot) {
			others.push_back(v);
			other_dims.push_back(d);
			shared.push_back(count[v] >= 2);
		}
	}

	Factor out;
	for (auto &[v, d] : dim_of) {
		if (v != pivot || keep_pivot) {
			out.vars.push_back(v);
			out.dims.push_back(d);
		}
	}
	out.mass.assign(checked_cells(out.dims), 0.0);
	for (auto *f : factors) {
		out.aliases |= f->aliases;
	}

	// strides of every "other" variable in each factor (0 when absent) and in the output
	std::vector<std::vector<size_t>> fstride(m, std::vector<size_t>(others.size(), 0));
	std::vector<size_t> fpivot(m);
	std::vector<const double *> fpmfv(m);
	for (size_t f = 0; f < m; ++f) {
		auto st = strides_of(factors[f]->dims);
		for (size_t k = 0; k < others.size(); ++k) {
			int p = factors[f]->position(others[k]);
			if (p >= 0) {
				fstride[f][k] = st[p];
			}
		}
		int pp = factors[f]->position(pivot);
		fpivot[f] = st[pp];
		fpmfv[f] = factors[f]->mfv[pp].data();
	}
	auto ost = strides_of(out.dims);
	std::vector<size_t> ostride(others.size());
	size_t opivot = 0;
	for (size_t k = 0; k < others.size(); ++k) {
		ostride[k] = ost[out.position(others[k])];
	}
	if (keep_pivot) {
		opivot = ost[out.position(pivot)];
	}

	std::vector<int> digit(others.size(), 0);
	std::vector<size_t> fbase(m);
	do {
		bool dead = false;
		size_t obase = 0;
		for (size_t k = 0; k < others.size(); ++k) {
			dead |= shared[k] && digit[k] == other_dims[k] - 1;
			obase += static_cast<size_t>(digit[k]) * ostride[k];
		}
		if (dead) {
			continue;
		}
		for (size_t f = 0; f < m; ++f) {
			size_t b = 0;
			for (size_t k = 0; k < others.size(); ++k) {
				b += static_cast<size_t>(digit[k]) * fstride[f][k];
			}
			fbase[f] = b;
		}
		double acc = 0.0;
		for (int i = 0; i < nb; ++i) {
			double r = 0.0;
			if (rule == BinRule::Bound) {
				double lo = std::numeric_limits<double>::infinity();
				double prod = 1.0;
				bool zero = false;
				for (size_t f = 0; f < m; ++f) {
					double v = fpmfv[f][i];
					double x = factors[f]->mass[fbase[f] + static_cast<size_t>(i) * fpivot[f]];
					if (v <= 0 || x <= 0) {
						zero = true;
						break;
					}
					lo = std::min(lo, x / v);
					prod *= v;
				}
				r = zero ? 0.0 : lo * prod;
			} else {
				double pm = 1.0, pd = 1.0, lo = std::numeric_limits<double>::infinity();
				bool zero = false;
				for (size_t f = 0; f < m; ++f) {
					double d = fpmfv[f][i];
					double x = factors[f]->mass[fbase[f] + static_cast<size_t>(i) * fpivot[f]];
					if (d <= 0 || x <= 0) {
						zero = true;
						break;
					}
					pm *= x;
					pd *= d;
					lo = std::min(lo, d);
				}
				r = zero ? 0.0 : pm * lo / pd;
			}
			if (keep_pivot) {
				out.mass[obase + static_cast<size_t>(i) * opivot] = r;
			} else {
				acc += r;
			}
		}
		if (!keep_pivot) {
			out.mass[obase] = acc;
		}
	} while (advance(digit, other_dims));

	// MFV (or distinct-value) vectors of the result
	std::vector<double> vmax(m, 0.0);
	for (size_t f = 0; f < m; ++f) {
		for (int i = 0; i < nb; ++i) {
			vmax[f] = std::max(vmax[f], fpmfv[f][i]);
		}
	}
	for (size_t j = 0; j < out.vars.size(); ++j) {
		int v = out.vars[j];
		std::vector<double> vec(out.dims[j], 0.0);
		if (v == pivot) {
			for (int i = 0; i < nb; ++i) {
				double x = rule == BinRule::Bound ? 1.0 : std::numeric_limits<double>::infinity();
				for (size_t f = 0; f < m; ++f) {
					x = rule == BinRule::Bound ? x * fpmfv[f][i] : std::min(x, fpmfv[f][i]);
				}
				vec[i] = x;
			}
		} else {
			for (int b = 0; b + 1 < out.dims[j]; ++b) {
				double best = std::numeric_limits<double>::infinity();
				for (size_t g = 0; g < m; ++g) {
					int p = factors[g]->position(v);
					if (p < 0) {
						continue;
					}
					double cand = factors[g]->mfv[p][b];
					if (rule == BinRule::Bound) {
						for (size_t f = 0; f < m && cand > 0; ++f) {
							if (f != g) {
								cand *= vmax[f];
							}
						}
					}
					best = std::min(best, cand);
				}
				vec[b] = best;
			}
		}
		out.mfv.push_back(std::move(vec));
	}
	return out;
}

Factor eliminate_variable(std::span<const Factor *const> factors, int var, BinRule rule) {
	if (factors.size() < 2) {
		throw std::invalid_argument("eliminate_variable needs at least two factors");
	}
	return join_factors(factors, var, false, rule);
}

Factor sum_out(const Factor &factor, int var, bool include_null) {
	int p = factor.position(var);
	if (p < 0) {
		throw std::invalid_argument("factor does not contain variable " + std::to_string(var));
	}
	size_t outer = 1, inner = 1;
	for (int j = 0; j < p; ++j) {
		outer *= static_cast<size_t>(factor.dims[j]);
	}
	for (size_t j = static_cast<size_t>(p) + 1; j < factor.dims.size(); ++j) {
		inner *= static_cast<size_t>(factor.dims[j]);
	}
	size_t d = static_cast<size_t>(factor.dims[p]);
	size_t used = include_null ? d : d - 1;
	Factor out;
	out.aliases = factor.aliases;
	out.vars = factor.vars;
	out.dims = factor.dims;
	out.mfv = factor.mfv;
	out.vars.erase(out.vars.begin() + p);
	out.dims.erase(out.dims.begin() + p);
	out.mfv.erase(out.mfv.begin() + p);
	out.mass.assign(outer * inner, 0.0);
	for (size_t o = 0; o < outer; ++o) {
		for (size_t s = 0; s < used; ++s) {
			const double *src = &factor.mass[(o * d + s) * inner];
			double *dst = &out.mass[o * inner];
			for (size_t i = 0; i < inner; ++i) {
				dst[i] += src[i];
			}
		}
	}
	return out;
}

Factor relabel(const Factor &factor, const std::vector<int> &labels) {
	if (labels.size() != factor.vars.size()) {
		throw std::invalid_argument("relabel needs one label per variable");
	}
	std::vector<int> uniq = labels;
	std::sort(uniq.begin(), uniq.end());
	uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

	Factor out;
	out.aliases = factor.aliases;
	out.vars = uniq;
	std::vector<int> members(uniq.size(), 0);
	std::vector<int> slot(labels.size());
	out.dims.assign(uniq.size(), 0);
	for (size_t j = 0; j < labels.size(); ++j) {
		int u = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), labels[j]) - uniq.begin());
		slot[j] = u;
		if (members[u]++ > 0 && out.dims[u] != factor.dims[j]) {
			throw EstimationError("merged variables have different bin counts");
		}
		out.dims[u] = factor.dims[j];
	}
	out.mass.assign(checked_cells(out.dims), 0.0);
	auto src_stride = strides_of(factor.dims);
	std::vector<int> digit(uniq.size(), 0);
	size_t cell = 0;
	do {
		bool dead = false;
		size_t src = 0;
		for (size_t j = 0; j < labels.size(); ++j) {
			int u = slot[j];
			dead |= members[u] > 1 && digit[u] == out.dims[u] - 1;
			src += static_cast<size_t>(digit[u]) * src_stride[j];
		}
		out.mass[cell++] = dead ? 0.0 : factor.mass[src];
	} while (advance(digit, out.dims));

	out.mfv.assign(uniq.size(), {});
	for (size_t j = 0; j < labels.size(); ++j) {
		auto &dst = out.mfv[slot[j]];
		if (dst.empty()) {
			dst = factor.mfv[j];
		} else {
			for (size_t b = 0; b < dst.size(); ++b) {
				dst[b] = std::min(dst[b], factor.mfv[j][b]);
			}
		}
	}
	for (size_t u = 0; u < uniq.size(); ++u) {
		if (members[u] > 1) {
			out.mfv[u].back() = 0.0;
		}
	}
	return out;
}

nlohmann::json FactorGraph::to_json() const {
	nlohmann::json j;
	j["aliases"] = graph.aliases;
	j["cyclic"] = graph.is_cyclic;
	auto &vars = j["variables"] = nlohmann::json::array();
	for (auto &v : variables) {
		nlohmann::json keys = nlohmann::json::array();
		for (auto &k : v.keys) {
			keys.push_back(k.str());
		}
		vars.push_back({{"id", v.id}, {"catalog_group", v.catalog_group}, {"keys", keys}, {"bins", v.bins}});
	}
	auto &facs = j["factors"] = nlohmann::json::array();
	auto &edges = j["edges"] = nlohmann::json::array();
	for (size_t i = 0; i < factors.size(); ++i) {
		auto &f = factors[i];
		facs.push_back({{"alias", f.alias},
		                {"table", f.table},
		                {"keys", f.key_columns},
		                {"key_vars", f.key_vars},
		                {"filtered_total", f.filtered_total},
		                {"factor", f.factor.to_json()}});
		for (int v : f.factor.vars) {
			edges.push_back({f.alias, v});
		}
	}
	return j;
}

FactorGraph build_factor_graph(const QueryIR &query, const JoinGraph &graph, const Model &model,
                               const EstimateOptions &options) {
	FactorGraph fg;
	fg.graph = graph;
	for (size_t g = 0; g < graph.groups.size(); ++g) {
		VariableNode v;
		v.id = static_cast<int>(g);
		v.catalog_group = graph.catalog_group[g];
		for (int k : graph.groups[g]) {
			v.keys.push_back(graph.keys[k]);
		}
		auto &first = graph.keys[graph.groups[g].front()];
		v.bins = model.bin_map(KeyRef {graph.tables[graph.alias_index(first.alias)], first.column}).num_bins();
		fg.variables.push_back(std::move(v));
	}
	for (size_t a = 0; a < graph.aliases.size(); ++a) {
		FactorNode node;
		node.alias = graph.aliases[a];
		node.table = graph.tables[a];
		for (size_t k = 0; k < graph.keys.size(); ++k) {
			if (graph.keys[k].alias == node.alias) {
				node.key_columns.push_back(graph.keys[k].column);
				node.key_vars.push_back(graph.key_group[k]);
			}
		}
		node.factor = base_factor(model, query, node.alias, node.table, node.key_columns, node.key_vars,
		                          static_cast<int>(a), options, options.rule, &node.filtered_total);
		fg.factors.push_back(std::move(node));
	}
	return fg;
}

namespace {

//! Picks the next variable: fewest factors, ties by smaller id. Returns -1 when nothing is left.
int next_variable(const std::vector<std::vector<int>> &factor_vars, int *degree) {
	std::map<int, int> deg;
	for (auto &vs : factor_vars) {
		for (int v : vs) {
			++deg[v];
		}
	}
	int best = -1, best_deg = 0;
	for (auto &[v, d] : deg) {
		if (best < 0 || d < best_deg) {
			best = v;
			best_deg = d;
		}
	}
	*degree = best_deg;
	return best;
}

double run_elimination(std::vector<Factor> factors, BinRule rule, std::vector<int> *order) {
	while (true) {
		std::vector<std::vector<int>> fv;
		for (auto &f : factors) {
			fv.push_back(f.vars);
		}
		int degree = 0;
		int v = next_variable(fv, &degree);
		if (v < 0) {
			break;
		}
		if (order) {
			order->push_back(v);
		}
		std::vector<size_t> idx;
		for (size_t i = 0; i < factors.size(); ++i) {
			if (factors[i].position(v) >= 0) {
				idx.push_back(i);
			}
		}
		Factor merged;
		if (idx.size() == 1) {
			merged = sum_out(factors[idx[0]], v, false);
		} else {
			std::vector<const Factor *> ptrs;
			for (size_t i : idx) {
				ptrs.push_back(&factors[i]);
			}
			merged = join_factors(ptrs, v, false, rule);
		}
		factors[idx[0]] = std::move(merged);
		for (size_t i = idx.size(); i-- > 1;) {
			factors.erase(factors.begin() + static_cast<std::ptrdiff_t>(idx[i]));
		}
	}
	double result = 1.0;
	for (auto &f : factors) {
		result *= f.mass.at(0);
	}
	return result;
}

} // namespace

std::vector<int> elimination_order(const FactorGraph &graph) {
	std::vector<std::vector<int>> fv;
	for (auto &f : graph.factors) {
		fv.push_back(f.factor.vars);
	}
	std::vector<int> order;
	while (true) {
		int degree = 0;
		int v = next_variable(fv, &degree);
		if (v < 0) {
			break;
		}
		order.push_back(v);
		std::vector<int> merged;
		std::vector<std::vector<int>> rest;
		bool placed = false;
		size_t at = 0;
		for (auto &vs : fv) {
			if (std::binary_search(vs.begin(), vs.end(), v)) {
				merged.insert(merged.end(), vs.begin(), vs.end());
				if (!placed) {
					at = rest.size();
					rest.emplace_back();
					placed = true;
				}
			} else {
				rest.push_back(vs);
			}
		}
		std::sort(merged.begin(), merged.end());
		merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
		merged.erase(std::find(merged.begin(), merged.end(), v));
		rest[at] = std::move(merged);
		fv = std::move(rest);
	}
	return order;
}

double evaluate_factor_graph(const FactorGraph &graph, BinRule rule) {
	std::vector<Factor> factors;
	for (auto &f : graph.factors) {
		factors.push_back(f.factor);
	}
	return run_elimination(std::move(factors), rule, nullptr);
}

nlohmann::json EstimateReport::to_json() const {
	nlohmann::json j;
	j["subplan"] = subplan;
	j["aliases"] = aliases;
	j["estimate"] = estimate;
	j["wall_ms"] = wall_ms;
	j["estimator"] = estimator;
	j["bin_budget"] = bin_budget;
	if (explain) {
		j["explain"] = *explain;
	}
	return j;
}

namespace {

EstimateReport run_estimate(const QueryIR &query, const Model &model, const EstimateOptions &options,
                            std::string estimator_tag) {
	auto t0 = Clock::now();
	JoinGraph g = build_join_graph(query, model.catalog);
	FactorGraph fg = build_factor_graph(query, g, model, options);
	std::vector<Factor> factors;
	for (auto &f : fg.factors) {
		factors.push_back(f.factor);
	}
	std::vector<int> order;
	double value = run_elimination(std::move(factors), options.rule, &order);
	EstimateReport r;
	r.aliases = g.aliases;
	r.subplan = join_names(g.aliases);
	r.estimate = value;
	r.estimator = std::move(estimator_tag);
	r.bin_budget = model.bin_budget();
	if (options.explain) {
		auto j = fg.to_json();
		j["elimination_order"] = order;
		j["estimate"] = value;
		r.explain = std::move(j);
	}
	r.wall_ms = elapsed_ms(t0);
	return r;
}

//! Shared state of one progressive session. Variables are labelled by the smallest key node of their connected
//! component inside the current alias set.
class Progressive {
public:
	Progressive(const QueryIR &query, const Model &model, const EstimateOptions &options)
	    : query_(query), model_(model), options_(options), g_(build_join_graph(query, model.catalog)) {
		key_alias_.resize(g_.keys.size());
		for (size_t k = 0; k < g_.keys.size(); ++k) {
			key_alias_[k] = g_.alias_index(g_.keys[k].alias);
		}
		key_nbrs_.resize(g_.keys.size());
		for (auto [a, b] : g_.edges) {
			key_nbrs_[a].push_back(b);
			key_nbrs_[b].push_back(a);
		}
	}

	const JoinGraph &graph() const {
		return g_;
	}

	Factor base(int alias) const {
		uint64_t mask = uint64_t {1} << alias;
		auto comp = components(mask);
		std::vector<std::string> columns;
		std::vector<int> labels;
		for (size_t k = 0; k < g_.keys.size(); ++k) {
			if (key_alias_[k] == alias) {
				columns.push_back(g_.keys[k].column);
				labels.push_back(comp[k]);
			}
		}
		Factor f = base_factor(model_, query_, g_.aliases[alias], g_.tables[alias], columns, labels, alias, options_,
		                       options_.rule, nullptr);
		return close_vars(std::move(f), mask, comp);
	}

	//! Highest alias whose removal keeps the set connected.
	int split_vertex(uint64_t mask) const {
		for (int a = 63; a >= 0; --a) {
			uint64_t bit = uint64_t {1} << a;
			if ((mask & bit) && g_.connected(mask & ~bit)) {
				return a;
			}
		}
		throw EstimationError("sub-plan is not connected");
	}

	//! Joins the factor of L with the base factor of R. Returns the sub-plan value; fills `joined` when given.
	double join(const Factor &left, const Factor &right, uint64_t mask, Factor *joined) const {
		auto comp = components(mask);
		Factor l = relabel_to(left, comp);
		Factor r = relabel_to(right, comp);
		std::vector<int> shared;
		std::set_intersection(l.vars.begin(), l.vars.end(), r.vars.begin(), r.vars.end(), std::back_inserter(shared));
		if (shared.empty()) {
			throw EstimationError("sub-plan halves share no join variable");
		}

		Factor lv = marginal_on(l, shared), rv = marginal_on(r, shared);
		const Factor *pair[2] = {&lv, &rv};
		Factor v = join_factors(pair, shared.front(), false, options_.rule);
		while (!v.vars.empty()) {
			v = sum_out(v, v.vars.front(), false);
		}
		double value = v.mass.at(0);

		if (joined) {
			int pivot = shared.front();
			for (int s : shared) {
				if (!is_open(s, mask, comp)) {
					pivot = s;
					break;
				}
			}
			const Factor *both[2] = {&l, &r};
			Factor j = join_factors(both, pivot, is_open(pivot, mask, comp), options_.rule);
			*joined = close_vars(std::move(j), mask, comp);
		}
		return value;
	}

private:
	std::vector<int> components(uint64_t mask) const {
		std::vector<int> parent(g_.keys.size());
		std::iota(parent.begin(), parent.end(), 0);
		std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
		for (auto [a, b] : g_.edges) {
			if ((mask >> key_alias_[a] & 1) && (mask >> key_alias_[b] & 1)) {
				int ra = find(a), rb = find(b);
				if (ra != rb) {
					parent[std::max(ra, rb)] = std::min(ra, rb);
				}
			}
		}
		std::vector<int> label(g_.keys.size(), -1);
		for (size_t k = 0; k < g_.keys.size(); ++k) {
			if (mask >> key_alias_[k] & 1) {
				label[k] = find(static_cast<int>(k));
			}
		}
		return label;
	}

	bool is_open(int label, uint64_t mask, const std::vector<int> &comp) const {
		for (size_t k = 0; k < comp.size(); ++k) {
			if (comp[k] != label) {
				continue;
			}
			for (int n : key_nbrs_[k]) {
				if (!(mask >> key_alias_[n] & 1)) {
					return true;
				}
			}
		}
		return false;
	}

	Factor relabel_to(const Factor &f, const std::vector<int> &comp) const {
		std::vector<int> labels;
		for (int v : f.vars) {
			labels.push_back(comp.at(v));
		}
		return relabel(f, labels);
	}

	Factor close_vars(Factor f, uint64_t mask, const std::vector<int> &comp) const {
		auto vars = f.vars;
		for (int v : vars) {
			if (!is_open(v, mask, comp)) {
				f = sum_out(f, v, false);
			}
		}
		return f;
	}

	static Factor marginal_on(Factor f, const std::vector<int> &keep) {
		auto vars = f.vars;
		for (int v : vars) {
			if (!std::binary_search(keep.begin(), keep.end(), v)) {
				f = sum_out(f, v, true);
			}
		}
		return f;
	}

	const QueryIR &query_;
	const Model &model_;
	EstimateOptions options_;
	JoinGraph g_;
	std::vector<int> key_alias_;
	std::vector<std::vector<int>> key_nbrs_;
};

Factor fresh_factor(const Progressive &p, uint64_t mask) {
	if (std::popcount(mask) == 1) {
		return p.base(std::countr_zero(mask));
	}
	int v = p.split_vertex(mask);
	uint64_t rest = mask & ~(uint64_t {1} << v);
	Factor joined;
	p.join(fresh_factor(p, rest), p.base(v), mask, &joined);
	return joined;
}

} // namespace

EstimateReport estimate(const QueryIR &query, const Model &model, const EstimateOptions &options) {
	return run_estimate(query, model, options, std::string(to_string(model.config.estimator)));
}

ProgressiveResult progressive_estimate(const QueryIR &query, const Model &model, size_t cap,
                                       const EstimateOptions &options) {
	auto t0 = Clock::now();
	Progressive p(query, model, options);
	auto &g = p.graph();
	auto list = enumerate_subplans(g, cap);
	ProgressiveResult out;
	out.truncated = list.truncated;
	std::string tag(to_string(model.config.estimator));
	int budget = model.bin_budget();

	std::unordered_map<uint64_t, Factor> cache;
	for (auto &plan : list.plans) {
		auto ts = Clock::now();
		double value = 0.0;
		if (plan.aliases.size() == 1) {
			Factor f = p.base(plan.aliases.front());
			value = f.total();
			cache.emplace(plan.mask, std::move(f));
		} else {
			int v = p.split_vertex(plan.mask);
			uint64_t rest = plan.mask & ~(uint64_t {1} << v);
			Factor joined;
			value = p.join(cache.at(rest), cache.at(uint64_t {1} << v), plan.mask, &joined);
			cache.emplace(plan.mask, std::move(joined));
		}
		EstimateReport r;
		r.aliases = g.alias_names(plan.mask);
		r.subplan = join_names(r.aliases);
		r.estimate = value;
		r.estimator = tag;
		r.bin_budget = budget;
		r.wall_ms = elapsed_ms(ts);
		out.reports.push_back(std::move(r));
	}
	out.plans = std::move(list.plans);
	out.wall_ms = elapsed_ms(t0);
	return out;
}

double fresh_subplan_estimate(const QueryIR &query, const Model &model, uint64_t mask, const EstimateOptions &options) {
	Progressive p(query, model, options);
	if (mask == 0 || !p.graph().connected(mask)) {
		throw std::invalid_argument("sub-plan must be a non-empty connected alias set");
	}
	if (std::popcount(mask) == 1) {
		return p.base(std::countr_zero(mask)).total();
	}
	int v = p.split_vertex(mask);
	uint64_t rest = mask & ~(uint64_t {1} << v);
	return p.join(fresh_factor(p, rest), p.base(v), mask, nullptr);
}

EstimateReport joinhist_estimate(const QueryIR &query, const Model &model, JoinHistMode mode) {
	JoinGraph g = build_join_graph(query, model.catalog);
	if (g.is_cyclic) {
		throw EstimationError("JoinHist does not support cyclic queries");
	}
	EstimateOptions o;
	switch (mode) {
	case JoinHistMode::Classic:
		o.rule = BinRule::Uniform;
		o.mass = MassSource::Independent;
		break;
	case JoinHistMode::WithBound:
		o.rule = BinRule::Bound;
		o.mass = MassSource::Independent;
		break;
	case JoinHistMode::WithConditional:
		o.rule = BinRule::Uniform;
		o.mass = MassSource::Conditional;
		break;
	}
	return run_estimate(query, model, o, "joinhist-" + std::string(to_string(mode)));
}

} // namespace fgcard
