#include "fgcard/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "fgcard/error.hpp"

namespace fgcard {

std::string_view to_string(EstimatorKind kind) {
	switch (kind) {
	case EstimatorKind::TrueScan:
		return "truescan";
	case EstimatorKind::Sample:
		return "sample";
	case EstimatorKind::ChowLiu:
		return "chowliu";
	}
	return "unknown";
}

EstimatorKind estimator_kind_from_string(std::string_view name) {
	if (name == "truescan") {
		return EstimatorKind::TrueScan;
	}
	if (name == "sample" || name == "sampling") {
		return EstimatorKind::Sample;
	}
	if (name == "chowliu" || name == "chow-liu") {
		return EstimatorKind::ChowLiu;
	}
	throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

double BinDistribution::mass_sum() const {
	double s = 0.0;
	for (auto m : mass) {
		s += m;
	}
	return s;
}

namespace {

size_t checked_cells(const std::vector<int> &dims) {
	size_t cells = 1;
	for (auto d : dims) {
		if (d <= 0) {
			throw EstimationError("bin map with no bins");
		}
		cells *= static_cast<size_t>(d);
		if (cells > MAX_TENSOR_CELLS) {
			throw EstimationError("distribution over " + std::to_string(dims.size()) + " keys exceeds " +
			                      std::to_string(MAX_TENSOR_CELLS) + " cells");
		}
	}
	return cells;
}

void prepare(BinDistribution &d, std::span<const KeyStats> keys) {
	for (auto &k : keys) {
		if (!k.bins) {
			throw EstimationError("no bin map for key column " + k.column);
		}
		d.keys.push_back(k.column);
		d.dims.push_back(k.bins->num_bins() + 1);
	}
	d.mass.assign(checked_cells(d.dims), 0.0);
	d.mfv.resize(keys.size());
}

BinDistribution scan(const Table &table, const Predicate *filter, std::span<const KeyStats> keys, MfvMode mode,
                     double scale) {
	BinDistribution d;
	prepare(d, keys);
	std::optional<BoundPredicate> bound;
	if (filter) {
		bound.emplace(*filter, table.def);
	}
	std::vector<const Column *> cols;
	for (auto &k : keys) {
		auto &c = table.column(k.column);
		if (!c.is_integral()) {
			throw EstimationError("key column " + table.def.name + "." + k.column + " is not an integer column");
		}
		cols.push_back(&c);
	}
	std::vector<int64_t> counts(d.mass.size(), 0);
	std::vector<std::unordered_map<int64_t, int64_t>> per_value(keys.size());
	int64_t filtered = 0;
	std::vector<int> bin(keys.size());
	for (size_t r = 0; r < table.num_rows(); ++r) {
		if (bound && !bound->eval(table, r)) {
			continue;
		}
		++filtered;
		size_t idx = 0;
		for (size_t k = 0; k < keys.size(); ++k) {
			if (cols[k]->is_null(r)) {
				bin[k] = d.dims[k] - 1;
			} else {
				bin[k] = keys[k].bins->bin_of(cols[k]->ints[r]);
				if (mode == MfvMode::Conditioned) {
					++per_value[k][cols[k]->ints[r]];
				}
			}
			idx = idx * static_cast<size_t>(d.dims[k]) + static_cast<size_t>(bin[k]);
		}
		++counts[idx];
	}
	for (size_t i = 0; i < counts.size(); ++i) {
		d.mass[i] = static_cast<double>(counts[i]) * scale;
	}
	d.filtered_total = static_cast<double>(filtered) * scale;
	for (size_t k = 0; k < keys.size(); ++k) {
		auto &out = d.mfv[k];
		int nb = d.dims[k] - 1;
		out.assign(d.dims[k], std::numeric_limits<double>::infinity());
		out[nb] = 0.0;
		if (keys[k].summary) {
			if (static_cast<int>(keys[k].summary->num_bins()) != nb) {
				throw EstimationError("bin summary of " + keys[k].column + " does not match its bin map");
			}
			for (int b = 0; b < nb; ++b) {
				out[b] = static_cast<double>(keys[k].summary->mfv[b]);
			}
		} else if (mode == MfvMode::Unconditioned) {
			throw EstimationError("unconditioned MFV requested without a bin summary for " + keys[k].column);
		}
		if (mode == MfvMode::Conditioned) {
			std::vector<int64_t> best(nb, 0);
			for (auto &[v, c] : per_value[k]) {
				auto b = keys[k].bins->bin_of(v);
				best[b] = std::max(best[b], c);
			}
			for (int b = 0; b < nb; ++b) {
				out[b] = std::min(out[b], static_cast<double>(best[b]) * scale);
			}
		}
	}
	return d;
}

} // namespace

BinDistribution truescan_distribution(const Table &table, const Predicate *filter, std::span<const KeyStats> keys,
                                      MfvMode mode) {
	return scan(table, filter, keys, mode, 1.0);
}

int64_t count_filtered(const Table &table, const Predicate *filter) {
	if (!filter) {
		return static_cast<int64_t>(table.num_rows());
	}
	BoundPredicate bound(*filter, table.def);
	int64_t n = 0;
	for (size_t r = 0; r < table.num_rows(); ++r) {
		n += bound.eval(table, r) ? 1 : 0;
	}
	return n;
}

namespace {

void check_rate(double rate) {
	if (!(rate > 0.0 && rate <= 1.0)) {
		throw std::invalid_argument("sampling rate must be in (0, 1], got " + std::to_string(rate));
	}
}

//! First `n` entries of a seeded partial Fisher-Yates shuffle of [0, population), returned sorted.
std::vector<size_t> draw_indices(size_t population, size_t n, std::mt19937_64 &rng) {
	std::vector<size_t> idx(population);
	std::iota(idx.begin(), idx.end(), size_t {0});
	n = std::min(n, population);
	for (size_t i = 0; i < n; ++i) {
		std::uniform_int_distribution<size_t> pick(i, population - 1);
		std::swap(idx[i], idx[pick(rng)]);
	}
	idx.resize(n);
	std::sort(idx.begin(), idx.end());
	return idx;
}

} // namespace

Sample build_sample(const Table &table, double rate, uint64_t seed) {
	check_rate(rate);
	Sample s;
	s.rate = rate;
	s.seed = seed;
	s.source_rows = table.num_rows();
	auto n = static_cast<size_t>(std::llround(rate * static_cast<double>(table.num_rows())));
	std::mt19937_64 rng(seed);
	s.rows = table.select_rows(draw_indices(table.num_rows(), n, rng));
	return s;
}

BinDistribution sample_distribution(const Sample &sample, const Predicate *filter, std::span<const KeyStats> keys,
                                    MfvMode mode) {
	check_rate(sample.rate);
	return scan(sample.rows, filter, keys, mode, 1.0 / sample.rate);
}

void update_sample(Sample &sample, const Table &inserted, const Table &deleted, uint64_t seed) {
	// rows of the old sample that survive the deletions form a uniform sample of the surviving rows
	Table survivors = sample.rows;
	if (deleted.num_rows() > 0) {
		std::unordered_multimap<uint64_t, size_t> index;
		for (size_t r = 0; r < survivors.num_rows(); ++r) {
			index.emplace(survivors.row_hash(r), r);
		}
		std::vector<uint8_t> drop(survivors.num_rows(), 0);
		for (size_t d = 0; d < deleted.num_rows(); ++d) {
			auto [lo, hi] = index.equal_range(deleted.row_hash(d));
			for (auto it = lo; it != hi; ++it) {
				if (survivors.rows_equal(it->second, deleted, d)) {
					drop[it->second] = 1;
					index.erase(it);
					break;
				}
			}
		}
		std::vector<size_t> keep;
		for (size_t r = 0; r < drop.size(); ++r) {
			if (!drop[r]) {
				keep.push_back(r);
			}
		}
		survivors = survivors.select_rows(keep);
	}
	if (deleted.num_rows() > sample.source_rows) {
		throw DataError("update deletes more rows than the table holds");
	}
	uint64_t total = sample.source_rows - deleted.num_rows() + inserted.num_rows();
	auto target = static_cast<uint64_t>(std::llround(sample.rate * static_cast<double>(total)));
	// survivors stand for the old rows; inserted rows top the sample up to the target size
	std::mt19937_64 rng(seed);
	uint64_t from_base = std::min<uint64_t>(target, survivors.num_rows());
	uint64_t from_inserted = std::min<uint64_t>(target - from_base, inserted.num_rows());
	auto base_pick = draw_indices(survivors.num_rows(), from_base, rng);
	auto ins_pick = draw_indices(inserted.num_rows(), from_inserted, rng);
	Table out = survivors.select_rows(base_pick);
	for (auto r : ins_pick) {
		out.append_row_from(inserted, r);
	}
	out.def.row_count = out.num_rows();
	sample.rows = std::move(out);
	sample.source_rows = total;
	sample.seed = seed;
}

double mutual_information(std::span<const int> x, std::span<const int> y) {
	if (x.size() != y.size()) {
		throw std::invalid_argument("mutual information needs columns of equal length");
	}
	if (x.empty()) {
		return 0.0;
	}
	int sx = *std::max_element(x.begin(), x.end()) + 1;
	int sy = *std::max_element(y.begin(), y.end()) + 1;
	std::vector<int64_t> joint(static_cast<size_t>(sx) * sy, 0), px(sx, 0), py(sy, 0);
	for (size_t i = 0; i < x.size(); ++i) {
		++joint[static_cast<size_t>(x[i]) * sy + y[i]];
		++px[x[i]];
		++py[y[i]];
	}
	double n = static_cast<double>(x.size());
	double mi = 0.0;
	for (int a = 0; a < sx; ++a) {
		for (int b = 0; b < sy; ++b) {
			auto c = joint[static_cast<size_t>(a) * sy + b];
			if (c == 0) {
				continue;
			}
			double pxy = static_cast<double>(c) / n;
			mi += pxy * std::log(static_cast<double>(c) * n / (static_cast<double>(px[a]) * static_cast<double>(py[b])));
		}
	}
	return std::max(0.0, mi);
}

int ChowLiuModel::node_index(std::string_view column) const {
	for (size_t i = 0; i < nodes.size(); ++i) {
		if (nodes[i].column == column) {
			return static_cast<int>(i);
		}
	}
	return -1;
}

std::vector<std::pair<int, int>> ChowLiuModel::edges() const {
	std::vector<std::pair<int, int>> out;
	for (size_t i = 0; i < parent.size(); ++i) {
		if (parent[i] >= 0) {
			out.emplace_back(parent[i], static_cast<int>(i));
		}
	}
	return out;
}

std::vector<double> ChowLiuModel::cpt(int node) const {
	int s = nodes[node].states;
	auto &counts = node_counts[node];
	if (parent[node] < 0) {
		std::vector<double> p(s);
		double denom = static_cast<double>(rows) + s;
		for (int i = 0; i < s; ++i) {
			p[i] = (static_cast<double>(counts[i]) + 1.0) / denom;
		}
		return p;
	}
	int ps = nodes[parent[node]].states;
	auto &pair = edge_counts[node];
	auto &pcounts = node_counts[parent[node]];
	std::vector<double> p(static_cast<size_t>(ps) * s);
	for (int a = 0; a < ps; ++a) {
		double denom = static_cast<double>(pcounts[a]) + s;
		for (int b = 0; b < s; ++b) {
			p[static_cast<size_t>(a) * s + b] = (static_cast<double>(pair[static_cast<size_t>(a) * s + b]) + 1.0) / denom;
		}
	}
	return p;
}

int ChowLiuModel::state_of(int n, const Table &table, size_t row, const BinMap *bins) const {
	return state_of(n, table.column(nodes[n].column), row, bins);
}

int ChowLiuModel::state_of(int n, const Column &col, size_t row, const BinMap *bins) const {
	auto &node = nodes[n];
	int null_state = node.states - 1;
	if (col.is_null(row)) {
		return null_state;
	}
	if (node.is_key) {
		if (!bins) {
			throw EstimationError("no bin map for key column " + node.column);
		}
		return bins->bin_of(col.ints[row]);
	}
	if (null_state == 0) {
		return 0;
	}
	if (col.is_string()) {
		auto it = node.string_category.find(col.strs[row]);
		return it == node.string_category.end() ? null_state - 1 : it->second;
	}
	double v = col.is_integral() ? static_cast<double>(col.ints[row]) : col.reals[row];
	auto it = std::lower_bound(node.upper_bounds.begin(), node.upper_bounds.end(), v);
	if (it == node.upper_bounds.end()) {
		return null_state - 1;
	}
	return static_cast<int>(it - node.upper_bounds.begin());
}

namespace {

//! Distinct-value histogram of one attribute column, ordered by value.
template <class T>
using ValueHistogram = std::map<T, int64_t>;

template <class T>
void fill_values_table(ChowLiuNode &node, const ValueHistogram<T> &hist, int64_t nulls,
                       const std::function<int(const T &)> &category) {
	TableDef def {node.column, {ColumnDef {node.column, node.kind}}, 0};
	node.values = Table::empty_like(def);
	auto &col = node.values.columns[0];
	node.value_counts.clear();
	node.value_category.clear();
	for (auto &[v, c] : hist) {
		if constexpr (std::is_same_v<T, std::string>) {
			col.strs.push_back(v);
		} else if constexpr (std::is_same_v<T, double>) {
			col.reals.push_back(v);
		} else {
			col.ints.push_back(v);
		}
		col.valid.push_back(1);
		node.value_counts.push_back(c);
		node.value_category.push_back(category(v));
	}
	col.push_null();
	node.value_counts.push_back(nulls);
	node.value_category.push_back(node.states - 1);
	node.values.def.row_count = node.values.num_rows();
}

template <class T>
void discretize_ordered(ChowLiuNode &node, const ValueHistogram<T> &hist, int64_t nulls) {
	int max_cats = MAX_ATTRIBUTE_STATES - 1;
	node.upper_bounds.clear();
	if (static_cast<int>(hist.size()) <= max_cats) {
		for (auto &[v, c] : hist) {
			node.upper_bounds.push_back(static_cast<double>(v));
		}
	} else {
		int64_t total = 0;
		for (auto &[v, c] : hist) {
			total += c;
		}
		// equal-depth buckets; empty raw buckets are dropped
		int64_t cum = 0;
		int last = -1;
		for (auto &[v, c] : hist) {
			int raw = static_cast<int>(static_cast<__int128>(cum) * max_cats / total);
			if (raw != last) {
				node.upper_bounds.push_back(static_cast<double>(v));
				last = raw;
			} else {
				node.upper_bounds.back() = static_cast<double>(v);
			}
			cum += c;
		}
	}
	node.states = static_cast<int>(node.upper_bounds.size()) + 1;
	fill_values_table<T>(node, hist, nulls, [&](const T &v) {
		auto it = std::lower_bound(node.upper_bounds.begin(), node.upper_bounds.end(), static_cast<double>(v));
		return static_cast<int>(it - node.upper_bounds.begin());
	});
}

void discretize_strings(ChowLiuNode &node, const ValueHistogram<std::string> &hist, int64_t nulls) {
	int max_cats = MAX_ATTRIBUTE_STATES - 1;
	std::vector<std::pair<std::string, int64_t>> by_freq(hist.begin(), hist.end());
	std::stable_sort(by_freq.begin(), by_freq.end(), [](auto &a, auto &b) { return a.second > b.second; });
	node.string_category.clear();
	bool overflow = static_cast<int>(by_freq.size()) > max_cats;
	int own = overflow ? max_cats - 1 : static_cast<int>(by_freq.size());
	for (int i = 0; i < own; ++i) {
		node.string_category[by_freq[i].first] = i;
	}
	node.states = own + (overflow ? 1 : 0) + 1;
	fill_values_table<std::string>(node, hist, nulls, [&](const std::string &v) {
		auto it = node.string_category.find(v);
		return it == node.string_category.end() ? node.states - 2 : it->second;
	});
}

ChowLiuNode attribute_node(const Column &col, const std::string &name) {
	ChowLiuNode node;
	node.column = name;
	node.kind = col.kind;
	int64_t nulls = 0;
	if (col.is_integral()) {
		ValueHistogram<int64_t> h;
		for (size_t r = 0; r < col.size(); ++r) {
			col.is_null(r) ? ++nulls : ++h[col.ints[r]];
		}
		discretize_ordered(node, h, nulls);
	} else if (col.kind == ColumnKind::Float) {
		ValueHistogram<double> h;
		for (size_t r = 0; r < col.size(); ++r) {
			col.is_null(r) ? ++nulls : ++h[col.reals[r]];
		}
		discretize_ordered(node, h, nulls);
	} else {
		ValueHistogram<std::string> h;
		for (size_t r = 0; r < col.size(); ++r) {
			col.is_null(r) ? ++nulls : ++h[col.strs[r]];
		}
		discretize_strings(node, h, nulls);
	}
	return node;
}

//! Dense factor over ascending node ids.
struct Factor {
	std::vector<int> vars;
	std::vector<int> dims;
	std::vector<double> data;
};

Factor multiply(const Factor &a, const Factor &b) {
	Factor out;
	std::set<int> vs(a.vars.begin(), a.vars.end());
	vs.insert(b.vars.begin(), b.vars.end());
	out.vars.assign(vs.begin(), vs.end());
	std::map<int, int> dim_of;
	for (size_t i = 0; i < a.vars.size(); ++i) {
		dim_of[a.vars[i]] = a.dims[i];
	}
	for (size_t i = 0; i < b.vars.size(); ++i) {
		dim_of[b.vars[i]] = b.dims[i];
	}
	for (auto v : out.vars) {
		out.dims.push_back(dim_of[v]);
	}
	out.data.assign(checked_cells(out.dims), 0.0);
	auto strides_for = [&](const Factor &f) {
		std::vector<size_t> s(out.vars.size(), 0);
		size_t stride = 1;
		for (size_t i = f.vars.size(); i-- > 0;) {
			auto pos = std::find(out.vars.begin(), out.vars.end(), f.vars[i]) - out.vars.begin();
			s[pos] = stride;
			stride *= static_cast<size_t>(f.dims[i]);
		}
		return s;
	};
	auto sa = strides_for(a), sb = strides_for(b);
	std::vector<int> digit(out.vars.size(), 0);
	size_t oa = 0, ob = 0;
	for (size_t cell = 0; cell < out.data.size(); ++cell) {
		out.data[cell] = a.data[oa] * b.data[ob];
		for (size_t i = out.vars.size(); i-- > 0;) {
			if (++digit[i] < out.dims[i]) {
				oa += sa[i];
				ob += sb[i];
				break;
			}
			oa -= sa[i] * static_cast<size_t>(out.dims[i] - 1);
			ob -= sb[i] * static_cast<size_t>(out.dims[i] - 1);
			digit[i] = 0;
		}
	}
	return out;
}

Factor sum_out(const Factor &f, int var) {
	auto pos = static_cast<size_t>(std::find(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
	Factor out;
	for (size_t i = 0; i < f.vars.size(); ++i) {
		if (i != pos) {
			out.vars.push_back(f.vars[i]);
			out.dims.push_back(f.dims[i]);
		}
	}
	size_t inner = 1;
	for (size_t i = pos + 1; i < f.dims.size(); ++i) {
		inner *= static_cast<size_t>(f.dims[i]);
	}
	size_t d = static_cast<size_t>(f.dims[pos]);
	size_t outer = f.data.size() / (inner * d);
	out.data.assign(outer * inner, 0.0);
	for (size_t o = 0; o < outer; ++o) {
		for (size_t k = 0; k < d; ++k) {
			for (size_t i = 0; i < inner; ++i) {
				out.data[o * inner + i] += f.data[(o * d + k) * inner + i];
			}
		}
	}
	return out;
}

} // namespace

ChowLiuModel fit_chowliu(const Table &table, std::span<const KeyStats> keys,
                         const std::vector<std::string> &filter_columns) {
	ChowLiuModel m;
	m.rows = static_cast<int64_t>(table.num_rows());
	std::vector<const BinMap *> node_bins;
	for (auto &k : keys) {
		if (!k.bins) {
			throw EstimationError("no bin map for key column " + k.column);
		}
		ChowLiuNode node;
		node.column = k.column;
		node.is_key = true;
		node.kind = ColumnKind::IntegerKey;
		node.states = k.bins->num_bins() + 1;
		m.nodes.push_back(std::move(node));
		node_bins.push_back(k.bins);
	}
	std::vector<std::string> attrs = filter_columns;
	if (attrs.empty()) {
		for (auto &c : table.def.columns) {
			if (c.kind == ColumnKind::Integer || c.kind == ColumnKind::Float || c.kind == ColumnKind::Categorical) {
				attrs.push_back(c.name);
			}
		}
	}
	for (auto &a : attrs) {
		if (m.node_index(a) >= 0) {
			continue;
		}
		m.nodes.push_back(attribute_node(table.column(a), a));
		node_bins.push_back(nullptr);
	}
	size_t n = m.nodes.size();
	std::vector<std::vector<int>> states(n, std::vector<int>(table.num_rows()));
	m.node_counts.assign(n, {});
	for (size_t i = 0; i < n; ++i) {
		m.node_counts[i].assign(m.nodes[i].states, 0);
		auto &col = table.column(m.nodes[i].column);
		for (size_t r = 0; r < table.num_rows(); ++r) {
			states[i][r] = m.state_of(static_cast<int>(i), col, r, node_bins[i]);
			++m.node_counts[i][states[i][r]];
		}
	}
	struct Candidate {
		double mi;
		std::pair<std::string, std::string> name;
		int a, b;
	};
	std::vector<Candidate> cands;
	for (size_t i = 0; i < n; ++i) {
		for (size_t j = i + 1; j < n; ++j) {
			auto &x = m.nodes[i].column, &y = m.nodes[j].column;
			cands.push_back(Candidate {mutual_information(states[i], states[j]), std::minmax(x, y),
			                           static_cast<int>(i), static_cast<int>(j)});
		}
	}
	std::sort(cands.begin(), cands.end(), [](const Candidate &p, const Candidate &q) {
		return p.mi != q.mi ? p.mi > q.mi : p.name < q.name;
	});
	std::vector<int> comp(n);
	std::iota(comp.begin(), comp.end(), 0);
	std::function<int(int)> root = [&](int x) { return comp[x] == x ? x : comp[x] = root(comp[x]); };
	std::vector<std::vector<int>> adj(n);
	for (auto &c : cands) {
		int ra = root(c.a), rb = root(c.b);
		if (ra == rb) {
			continue;
		}
		comp[ra] = rb;
		adj[c.a].push_back(c.b);
		adj[c.b].push_back(c.a);
		m.total_mi += c.mi;
	}
	m.parent.assign(n, -2);
	for (size_t start = 0; start < n; ++start) {
		if (m.parent[start] != -2) {
			continue;
		}
		m.parent[start] = -1;
		std::vector<int> stack {static_cast<int>(start)};
		while (!stack.empty()) {
			int u = stack.back();
			stack.pop_back();
			std::sort(adj[u].begin(), adj[u].end());
			for (int v : adj[u]) {
				if (m.parent[v] == -2) {
					m.parent[v] = u;
					stack.push_back(v);
				}
			}
		}
	}
	m.edge_counts.assign(n, {});
	for (size_t i = 0; i < n; ++i) {
		int p = m.parent[i];
		if (p < 0) {
			continue;
		}
		int s = m.nodes[i].states;
		m.edge_counts[i].assign(static_cast<size_t>(m.nodes[p].states) * s, 0);
		for (size_t r = 0; r < table.num_rows(); ++r) {
			++m.edge_counts[i][static_cast<size_t>(states[p][r]) * s + states[i][r]];
		}
	}
	return m;
}

std::vector<double> chowliu_joint(const ChowLiuModel &model, const std::vector<int> &query_nodes,
                                  const std::vector<std::vector<double>> &evidence, double *normalizer) {
	std::vector<Factor> factors;
	for (size_t i = 0; i < model.nodes.size(); ++i) {
		int n = static_cast<int>(i);
		int s = model.nodes[i].states;
		auto table = model.cpt(n);
		const std::vector<double> *ev = i < evidence.size() && !evidence[i].empty() ? &evidence[i] : nullptr;
		Factor f;
		int p = model.parent[i];
		if (p < 0) {
			f.vars = {n};
			f.dims = {s};
		} else if (p < n) {
			f.vars = {p, n};
			f.dims = {model.nodes[p].states, s};
		} else {
			// keep vars ascending: transpose parent-major layout
			f.vars = {n, p};
			f.dims = {s, model.nodes[p].states};
			std::vector<double> t(table.size());
			int ps = model.nodes[p].states;
			for (int a = 0; a < ps; ++a) {
				for (int b = 0; b < s; ++b) {
					t[static_cast<size_t>(b) * ps + a] = table[static_cast<size_t>(a) * s + b];
				}
			}
			table = std::move(t);
		}
		if (ev) {
			size_t inner = f.vars.back() == n ? 1 : static_cast<size_t>(f.dims.back());
			for (size_t c = 0; c < table.size(); ++c) {
				table[c] *= (*ev)[(c / inner) % static_cast<size_t>(s)];
			}
		}
		f.data = std::move(table);
		factors.push_back(std::move(f));
	}
	std::set<int> keep(query_nodes.begin(), query_nodes.end());
	std::set<int> pending;
	for (size_t i = 0; i < model.nodes.size(); ++i) {
		if (!keep.count(static_cast<int>(i))) {
			pending.insert(static_cast<int>(i));
		}
	}
	while (!pending.empty()) {
		// cheapest elimination first, ties by node id
		int best = -1;
		double best_cost = 0;
		for (int v : pending) {
			std::map<int, int> scope;
			for (auto &f : factors) {
				if (std::find(f.vars.begin(), f.vars.end(), v) != f.vars.end()) {
					for (size_t i = 0; i < f.vars.size(); ++i) {
						scope[f.vars[i]] = f.dims[i];
					}
				}
			}
			double cost = 1;
			for (auto &[var, d] : scope) {
				cost *= d;
			}
			if (best < 0 || cost < best_cost) {
				best = v;
				best_cost = cost;
			}
		}
		pending.erase(best);
		std::vector<Factor> rest;
		std::optional<Factor> acc;
		for (auto &f : factors) {
			if (std::find(f.vars.begin(), f.vars.end(), best) != f.vars.end()) {
				acc = acc ? multiply(*acc, f) : f;
			} else {
				rest.push_back(std::move(f));
			}
		}
		if (acc) {
			rest.push_back(sum_out(*acc, best));
		}
		factors = std::move(rest);
	}
	Factor result {{}, {}, {1.0}};
	for (auto &f : factors) {
		result = multiply(result, f);
	}
	double z = 0;
	for (auto v : result.data) {
		z += v;
	}
	if (normalizer) {
		*normalizer = z;
	}
	// reorder from ascending node ids to the requested order
	std::vector<int> dims;
	for (auto q : query_nodes) {
		dims.push_back(model.nodes[q].states);
	}
	std::vector<double> out(checked_cells(dims), 0.0);
	std::vector<size_t> stride(query_nodes.size());
	for (size_t i = 0; i < query_nodes.size(); ++i) {
		size_t s = 1;
		for (size_t j = result.vars.size(); j-- > 0;) {
			if (result.vars[j] == query_nodes[i]) {
				stride[i] = s;
			}
			s *= static_cast<size_t>(result.dims[j]);
		}
	}
	std::vector<int> digit(query_nodes.size(), 0);
	for (size_t cell = 0; cell < out.size(); ++cell) {
		size_t src = 0;
		for (size_t i = 0; i < digit.size(); ++i) {
			src += stride[i] * static_cast<size_t>(digit[i]);
		}
		out[cell] = result.data[src];
		for (size_t i = digit.size(); i-- > 0;) {
			if (++digit[i] < dims[i]) {
				break;
			}
			digit[i] = 0;
		}
	}
	return out;
}

ChowLiuEvidence chowliu_evidence(const ChowLiuModel &model, const Predicate *filter) {
	ChowLiuEvidence ev;
	ev.weights.assign(model.nodes.size(), {});
	if (!filter) {
		return ev;
	}
	std::vector<Predicate> conjuncts =
	    filter->kind == Predicate::Kind::And ? filter->children : std::vector<Predicate> {*filter};
	std::map<int, std::vector<Predicate>> per_node;
	for (auto &c : conjuncts) {
		auto cols = c.columns();
		int n = cols.size() == 1 ? model.node_index(cols.front()) : -1;
		if (n < 0 || model.nodes[n].is_key || c.contains_like()) {
			ev.complete = false;
			continue;
		}
		per_node[n].push_back(c);
	}
	for (auto &[n, parts] : per_node) {
		auto &node = model.nodes[n];
		BoundPredicate bound(Predicate::all_of(parts), node.values.def);
		std::vector<double> pass(node.states, 0.0), all(node.states, 0.0);
		bool null_passes = false;
		for (size_t r = 0; r < node.values.num_rows(); ++r) {
			bool ok = bound.eval(node.values, r);
			auto cat = node.value_category[r];
			all[cat] += static_cast<double>(node.value_counts[r]);
			pass[cat] += ok ? static_cast<double>(node.value_counts[r]) : 0.0;
			if (node.values.columns[0].is_null(r)) {
				null_passes = ok;
			}
		}
		auto &w = ev.weights[n];
		w.assign(node.states, 0.0);
		for (int s = 0; s < node.states; ++s) {
			if (all[s] > 0) {
				w[s] = pass[s] / all[s];
			}
		}
		if (all[node.states - 1] == 0 && null_passes) {
			w[node.states - 1] = 1.0;
		}
	}
	return ev;
}

BinDistribution chowliu_distribution(const ChowLiuModel &model, const Sample *fallback, const Predicate *filter,
                                     std::span<const KeyStats> keys) {
	BinDistribution d;
	prepare(d, keys);
	std::vector<int> qnodes;
	for (auto &k : keys) {
		int n = model.node_index(k.column);
		if (n < 0 || !model.nodes[n].is_key) {
			throw EstimationError("key " + k.column + " is not part of the Chow-Liu model");
		}
		if (model.nodes[n].states != k.bins->num_bins() + 1) {
			throw EstimationError("bin map of " + k.column + " does not match the Chow-Liu model");
		}
		qnodes.push_back(n);
	}
	auto ev = chowliu_evidence(model, filter);
	double z = 0;
	auto joint = chowliu_joint(model, qnodes, ev.weights, &z);
	double filtered = 0;
	double scale = 0;
	if (ev.complete) {
		filtered = static_cast<double>(model.rows) * z;
		scale = static_cast<double>(model.rows);
	} else {
		if (!fallback) {
			throw EstimationError("filter needs a sample fallback the model does not have");
		}
		filtered = static_cast<double>(count_filtered(fallback->rows, filter)) / fallback->rate;
		scale = z > 0 ? filtered / z : 0.0;
	}
	d.filtered_total = filtered;
	// node states and distribution dims share the layout: bins, then null
	for (size_t cell = 0; cell < d.mass.size(); ++cell) {
		d.mass[cell] = joint[cell] * scale;
	}
	for (size_t k = 0; k < keys.size(); ++k) {
		if (!keys[k].summary) {
			throw EstimationError("Chow-Liu estimates need the bin summary of " + keys[k].column);
		}
		for (int b = 0; b + 1 < d.dims[k]; ++b) {
			d.mfv[k].push_back(static_cast<double>(keys[k].summary->mfv[b]));
		}
		d.mfv[k].push_back(0.0);
	}
	return d;
}

namespace {

//! Adds (sign +1) or removes (sign -1) one row of `table` to the value histogram of an attribute node.
void adjust_attribute(ChowLiuNode &node, const Column &col, size_t row, int sign, int state) {
	auto &vals = node.values.columns[0];
	size_t n = node.values.num_rows();
	size_t pos = n - 1; // null row
	bool found = col.is_null(row);
	if (!found) {
		// values are sorted with the null row last
		size_t lo = 0, hi = n - 1;
		while (lo < hi) {
			size_t mid = (lo + hi) / 2;
			bool less = col.is_integral()            ? vals.ints[mid] < col.ints[row]
			            : col.kind == ColumnKind::Float ? vals.reals[mid] < col.reals[row]
			                                            : vals.strs[mid] < col.strs[row];
			if (less) {
				lo = mid + 1;
			} else {
				hi = mid;
			}
		}
		pos = lo;
		found = pos < n - 1 && vals.equal_at(pos, col, row);
	}
	if (!found) {
		if (sign < 0) {
			throw DataError("deleted value of " + node.column + " was never inserted");
		}
		// insert a new distinct value at `pos`
		Table grown = Table::empty_like(node.values.def);
		for (size_t r = 0; r < n; ++r) {
			if (r == pos) {
				grown.columns[0].push_from(col, row);
			}
			grown.columns[0].push_from(vals, r);
		}
		node.values = std::move(grown);
		node.values.def.row_count = node.values.num_rows();
		node.value_counts.insert(node.value_counts.begin() + static_cast<std::ptrdiff_t>(pos), 0);
		node.value_category.insert(node.value_category.begin() + static_cast<std::ptrdiff_t>(pos), state);
	}
	node.value_counts[pos] += sign;
	if (node.value_counts[pos] < 0) {
		throw DataError("deleted value of " + node.column + " drops below zero count");
	}
}

} // namespace

void update_chowliu(ChowLiuModel &model, const Table &inserted, const Table &deleted,
                    const std::map<std::string, const BinMap *> &key_bins) {
	ChowLiuModel next = model;
	size_t n = next.nodes.size();
	std::vector<const BinMap *> bins(n, nullptr);
	for (size_t i = 0; i < n; ++i) {
		if (next.nodes[i].is_key) {
			auto it = key_bins.find(next.nodes[i].column);
			if (it == key_bins.end()) {
				throw EstimationError("no bin map for key column " + next.nodes[i].column);
			}
			bins[i] = it->second;
		}
	}
	auto apply = [&](const Table &t, int sign) {
		std::vector<int> st(n);
		std::vector<const Column *> cols(n);
		for (size_t i = 0; i < n; ++i) {
			cols[i] = &t.column(next.nodes[i].column);
		}
		for (size_t r = 0; r < t.num_rows(); ++r) {
			for (size_t i = 0; i < n; ++i) {
				st[i] = next.state_of(static_cast<int>(i), *cols[i], r, bins[i]);
				next.node_counts[i][st[i]] += sign;
				if (next.node_counts[i][st[i]] < 0) {
					throw DataError("update removes rows the Chow-Liu statistics never saw");
				}
				if (!next.nodes[i].is_key) {
					adjust_attribute(next.nodes[i], *cols[i], r, sign, st[i]);
				}
			}
			for (size_t i = 0; i < n; ++i) {
				int p = next.parent[i];
				if (p >= 0) {
					next.edge_counts[i][static_cast<size_t>(st[p]) * next.nodes[i].states + st[i]] += sign;
				}
			}
		}
		next.rows += sign * static_cast<int64_t>(t.num_rows());
	};
	apply(deleted, -1);
	apply(inserted, +1);
	model = std::move(next);
}

BinDistribution TableEstimator::distribution(const Predicate *filter, std::span<const KeyStats> keys,
                                             MfvMode mode) const {
	switch (kind) {
	case EstimatorKind::TrueScan:
		if (!table) {
			throw EstimationError("truescan estimator without table data");
		}
		return truescan_distribution(*table, filter, keys, mode);
	case EstimatorKind::Sample:
		if (!sample) {
			throw EstimationError("sample estimator without a sample");
		}
		return sample_distribution(*sample, filter, keys, mode);
	case EstimatorKind::ChowLiu:
		if (!chowliu) {
			throw EstimationError("Chow-Liu estimator without a fitted model");
		}
		return chowliu_distribution(*chowliu, sample ? &*sample : nullptr, filter, keys);
	}
	throw EstimationError("unknown estimator kind");
}

TableEstimator fit_estimator(const Table &table, std::span<const KeyStats> keys, const EstimatorConfig &config) {
	TableEstimator e;
	e.kind = config.kind;
	switch (config.kind) {
	case EstimatorKind::TrueScan:
		e.table = table;
		break;
	case EstimatorKind::Sample:
		e.sample = build_sample(table, config.rate, config.seed);
		break;
	case EstimatorKind::ChowLiu:
		e.chowliu = fit_chowliu(table, keys);
		e.sample = build_sample(table, config.rate, config.seed);
		break;
	}
	return e;
}

void update_estimator(TableEstimator &estimator, const Table &inserted, const Table &deleted,
                      const std::map<std::string, const BinMap *> &key_bins, uint64_t seed) {
	if (estimator.table) {
		apply_row_delta(*estimator.table, inserted, deleted);
	}
	if (estimator.chowliu) {
		update_chowliu(*estimator.chowliu, inserted, deleted, key_bins);
	}
	if (estimator.sample) {
		update_sample(*estimator.sample, inserted, deleted, seed);
	}
}

} // namespace fgcard
