#include "fgcard/model_io.hpp"

#include <bit>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <sys/file.h>
#include <unistd.h>

#include "fgcard/error.hpp"

namespace fgcard {

static_assert(std::endian::native == std::endian::little, "model files are little-endian");

namespace {

class Writer {
public:
	std::string buf;

	template <class T> void pod(T v) {
		char raw[sizeof(T)];
		std::memcpy(raw, &v, sizeof(T));
		buf.append(raw, sizeof(T));
	}
	void u64(uint64_t v) {
		pod(v);
	}
	void i64(int64_t v) {
		pod(v);
	}
	void f64(double v) {
		pod(v);
	}
	void str(std::string_view s) {
		u64(s.size());
		buf.append(s);
	}
	template <class T> void array(const std::vector<T> &v) {
		u64(v.size());
		if (!v.empty()) {
			buf.append(reinterpret_cast<const char *>(v.data()), v.size() * sizeof(T));
		}
	}
};

class Reader {
public:
	explicit Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {
	}

	template <class T> T pod() {
		need(sizeof(T));
		T v;
		std::memcpy(&v, data_.data() + pos_, sizeof(T));
		pos_ += sizeof(T);
		return v;
	}
	uint64_t u64() {
		return pod<uint64_t>();
	}
	int64_t i64() {
		return pod<int64_t>();
	}
	double f64() {
		return pod<double>();
	}
	std::string str() {
		uint64_t n = u64();
		need(n);
		std::string s(data_.substr(pos_, n));
		pos_ += n;
		return s;
	}
	template <class T> std::vector<T> array() {
		uint64_t n = u64();
		if (n > (data_.size() - pos_) / sizeof(T)) {
			fail();
		}
		std::vector<T> v(n);
		if (n) {
			std::memcpy(v.data(), data_.data() + pos_, n * sizeof(T));
		}
		pos_ += n * sizeof(T);
		return v;
	}
	void finish() const {
		if (pos_ != data_.size()) {
			throw DataError("model section " + what_ + " has trailing bytes");
		}
	}

private:
	void need(uint64_t n) const {
		if (n > data_.size() - pos_) {
			fail();
		}
	}
	[[noreturn]] void fail() const {
		throw DataError("model section " + what_ + " is truncated");
	}

	std::string_view data_;
	std::string what_;
	size_t pos_ = 0;
};

void write_table(Writer &w, const Table &t) {
	w.str(t.def.name);
	w.u64(t.def.row_count);
	w.u64(t.def.columns.size());
	for (auto &c : t.def.columns) {
		w.str(c.name);
		w.str(to_string(c.kind));
	}
	w.u64(t.num_rows());
	for (auto &col : t.columns) {
		w.array(col.valid);
		if (col.is_integral()) {
			w.array(col.ints);
		} else if (col.is_string()) {
			w.u64(col.strs.size());
			for (auto &s : col.strs) {
				w.str(s);
			}
		} else {
			w.array(col.reals);
		}
	}
}

Table read_table(Reader &r) {
	Table t;
	t.def.name = r.str();
	t.def.row_count = r.u64();
	uint64_t ncols = r.u64();
	for (uint64_t i = 0; i < ncols; ++i) {
		ColumnDef c;
		c.name = r.str();
		c.kind = column_kind_from_string(r.str());
		t.def.columns.push_back(std::move(c));
	}
	uint64_t rows = r.u64();
	for (auto &cd : t.def.columns) {
		Column col;
		col.kind = cd.kind;
		col.valid = r.array<uint8_t>();
		size_t payload = 0;
		if (col.is_integral()) {
			col.ints = r.array<int64_t>();
			payload = col.ints.size();
		} else if (col.is_string()) {
			uint64_t n = r.u64();
			for (uint64_t i = 0; i < n; ++i) {
				col.strs.push_back(r.str());
			}
			payload = col.strs.size();
		} else {
			col.reals = r.array<double>();
			payload = col.reals.size();
		}
		if (col.valid.size() != rows || payload != rows) {
			throw DataError("model table " + t.def.name + " has ragged columns");
		}
		t.columns.push_back(std::move(col));
	}
	return t;
}

void write_sample(Writer &w, const Sample &s) {
	w.f64(s.rate);
	w.u64(s.seed);
	w.u64(s.source_rows);
	write_table(w, s.rows);
}

Sample read_sample(Reader &r) {
	Sample s;
	s.rate = r.f64();
	s.seed = r.u64();
	s.source_rows = r.u64();
	s.rows = read_table(r);
	return s;
}

void write_chowliu(Writer &w, const ChowLiuModel &m) {
	w.u64(m.nodes.size());
	for (auto &n : m.nodes) {
		w.str(n.column);
		w.pod<uint8_t>(n.is_key ? 1 : 0);
		w.str(to_string(n.kind));
		w.i64(n.states);
		write_table(w, n.values);
		w.array(n.value_counts);
		w.array(n.value_category);
		w.array(n.upper_bounds);
		w.u64(n.string_category.size());
		for (auto &[s, c] : n.string_category) {
			w.str(s);
			w.i64(c);
		}
	}
	std::vector<int32_t> parent(m.parent.begin(), m.parent.end());
	w.array(parent);
	for (auto &c : m.node_counts) {
		w.array(c);
	}
	w.u64(m.edge_counts.size());
	for (auto &c : m.edge_counts) {
		w.array(c);
	}
	w.i64(m.rows);
	w.f64(m.total_mi);
}

ChowLiuModel read_chowliu(Reader &r) {
	ChowLiuModel m;
	uint64_t n = r.u64();
	for (uint64_t i = 0; i < n; ++i) {
		ChowLiuNode node;
		node.column = r.str();
		node.is_key = r.pod<uint8_t>() != 0;
		node.kind = column_kind_from_string(r.str());
		node.states = static_cast<int>(r.i64());
		node.values = read_table(r);
		node.value_counts = r.array<int64_t>();
		node.value_category = r.array<int32_t>();
		node.upper_bounds = r.array<double>();
		uint64_t cats = r.u64();
		for (uint64_t c = 0; c < cats; ++c) {
			auto s = r.str();
			node.string_category[s] = static_cast<int>(r.i64());
		}
		m.nodes.push_back(std::move(node));
	}
	auto parent = r.array<int32_t>();
	if (parent.size() != n) {
		throw DataError("model Chow-Liu tree has a malformed parent list");
	}
	m.parent.assign(parent.begin(), parent.end());
	for (uint64_t i = 0; i < n; ++i) {
		m.node_counts.push_back(r.array<int64_t>());
	}
	uint64_t edges = r.u64();
	for (uint64_t i = 0; i < edges; ++i) {
		m.edge_counts.push_back(r.array<int64_t>());
	}
	m.rows = r.i64();
	m.total_mi = r.f64();
	return m;
}

nlohmann::json config_to_json(const RunConfig &c) {
	nlohmann::json j;
	j["total_bins"] = c.total_bins ? nlohmann::json(*c.total_bins) : nlohmann::json(nullptr);
	j["group_overrides"] = nlohmann::json::object();
	for (auto &[g, k] : c.group_overrides) {
		j["group_overrides"][std::to_string(g)] = k;
	}
	j["strategy"] = to_string(c.strategy);
	j["estimator"] = to_string(c.estimator);
	j["rate"] = c.rate;
	j["seed"] = c.seed;
	j["subplan_cap"] = c.subplan_cap;
	j["workload_group_counts"] = nlohmann::json::object();
	for (auto &[g, n] : c.workload_group_counts) {
		j["workload_group_counts"][std::to_string(g)] = n;
	}
	return j;
}

RunConfig config_from_json(const nlohmann::json &j) {
	RunConfig c;
	if (!j.at("total_bins").is_null()) {
		c.total_bins = j.at("total_bins").get<int>();
	}
	for (auto &[g, k] : j.at("group_overrides").items()) {
		c.group_overrides[std::stoi(g)] = k.get<int>();
	}
	c.strategy = bin_strategy_from_string(j.at("strategy").get<std::string>());
	c.estimator = estimator_kind_from_string(j.at("estimator").get<std::string>());
	c.rate = j.at("rate").get<double>();
	c.seed = j.at("seed").get<uint64_t>();
	c.subplan_cap = j.at("subplan_cap").get<size_t>();
	for (auto &[g, n] : j.at("workload_group_counts").items()) {
		c.workload_group_counts[std::stoi(g)] = n.get<int64_t>();
	}
	return c;
}

std::string section_name(const std::string &kind, const std::string &id) {
	return kind + ":" + id;
}

std::string read_file(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw DataError("cannot open model file " + path.string());
	}
	std::ostringstream s;
	s << in.rdbuf();
	return s.str();
}

void write_all(int fd, const std::string &bytes, const std::filesystem::path &path) {
	size_t off = 0;
	while (off < bytes.size()) {
		ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
		if (n < 0) {
			if (errno == EINTR) {
				continue;
			}
			throw DataError("cannot write " + path.string() + ": " + std::strerror(errno));
		}
		off += static_cast<size_t>(n);
	}
}

} // namespace

std::string serialize_model(const Model &model) {
	nlohmann::json header;
	header["format_version"] = MODEL_FORMAT_VERSION;
	header["catalog"] = model.catalog.to_json();
	header["config"] = config_to_json(model.config);
	header["provenance"] = model.provenance;

	std::vector<std::pair<std::string, std::string>> sections;
	auto add = [&](std::string name, Writer &&w) { sections.emplace_back(std::move(name), std::move(w.buf)); };

	header["bins"] = nlohmann::json::array();
	for (auto &[g, bm] : model.bins) {
		Writer w;
		w.array(bm.values());
		w.array(bm.bins());
		auto name = section_name("bins", std::to_string(g));
		header["bins"].push_back({{"group", g},
		                          {"strategy", to_string(bm.strategy)},
		                          {"num_bins", bm.num_bins()},
		                          {"values", bm.values().size()},
		                          {"section", name}});
		add(name, std::move(w));
	}

	header["keys"] = nlohmann::json::array();
	for (auto &[key, store] : model.stores) {
		Writer ws;
		std::vector<int64_t> values, counts;
		for (auto &[v, n] : store.counts()) {
			values.push_back(v);
			counts.push_back(n);
		}
		ws.array(values);
		ws.array(counts);
		auto sum_it = model.summaries.find(key);
		if (sum_it == model.summaries.end()) {
			throw std::invalid_argument("model has no summary for " + key.str());
		}
		Writer wsum;
		wsum.array(sum_it->second.total);
		wsum.array(sum_it->second.mfv);
		wsum.array(sum_it->second.ndv);
		auto store_name = section_name("store", key.str());
		auto summary_name = section_name("summary", key.str());
		header["keys"].push_back({{"key", key.str()},
		                          {"rows", store.total()},
		                          {"ndv", store.ndv()},
		                          {"store_section", store_name},
		                          {"summary_section", summary_name}});
		add(store_name, std::move(ws));
		add(summary_name, std::move(wsum));
	}

	header["estimators"] = nlohmann::json::array();
	for (auto &[table, est] : model.estimators) {
		nlohmann::json e {{"table", table}, {"kind", to_string(est.kind)}};
		Writer w;
		w.pod<uint8_t>(est.table ? 1 : 0);
		if (est.table) {
			write_table(w, *est.table);
			e["table_rows"] = est.table->num_rows();
		}
		w.pod<uint8_t>(est.sample ? 1 : 0);
		if (est.sample) {
			write_sample(w, *est.sample);
			e["sample"] = {{"rate", est.sample->rate},
			               {"seed", est.sample->seed},
			               {"rows", est.sample->rows.num_rows()},
			               {"source_rows", est.sample->source_rows}};
		}
		w.pod<uint8_t>(est.chowliu ? 1 : 0);
		if (est.chowliu) {
			write_chowliu(w, *est.chowliu);
			nlohmann::json nodes = nlohmann::json::array();
			for (size_t i = 0; i < est.chowliu->nodes.size(); ++i) {
				auto &n = est.chowliu->nodes[i];
				nodes.push_back({{"column", n.column}, {"states", n.states}, {"parent", est.chowliu->parent[i]}});
			}
			e["chowliu"] = {{"nodes", nodes}, {"rows", est.chowliu->rows}};
		}
		auto name = section_name("estimator", table);
		e["section"] = name;
		header["estimators"].push_back(e);
		add(name, std::move(w));
	}

	header["sections"] = nlohmann::json::array();
	for (auto &[name, bytes] : sections) {
		header["sections"].push_back({{"name", name}, {"bytes", bytes.size()}});
	}

	auto text = header.dump(1, '\t');
	Writer out;
	out.buf.append(MODEL_MAGIC);
	out.u64(text.size());
	out.buf.append(text);
	for (auto &[name, bytes] : sections) {
		out.u64(bytes.size());
		out.buf.append(bytes);
	}
	return std::move(out.buf);
}

namespace {

nlohmann::json parse_header(std::string_view bytes, size_t *payload_start) {
	if (bytes.size() < MODEL_MAGIC.size() || bytes.substr(0, MODEL_MAGIC.size()) != MODEL_MAGIC) {
		throw DataError("not a model file (bad magic)");
	}
	Reader r(bytes.substr(MODEL_MAGIC.size()), "header");
	uint64_t len = r.u64();
	size_t start = MODEL_MAGIC.size() + sizeof(uint64_t);
	if (len > bytes.size() - start) {
		throw DataError("model header is truncated");
	}
	nlohmann::json header;
	try {
		header = nlohmann::json::parse(bytes.substr(start, len));
	} catch (const nlohmann::json::exception &e) {
		throw DataError(std::string("model header is not valid JSON: ") + e.what());
	}
	int version = header.value("format_version", 0);
	if (version != MODEL_FORMAT_VERSION) {
		throw DataError("unsupported model format_version " + std::to_string(version) + " (expected " +
		                std::to_string(MODEL_FORMAT_VERSION) + ")");
	}
	if (payload_start) {
		*payload_start = start + len;
	}
	return header;
}

} // namespace

Model deserialize_model(std::string_view bytes) {
	size_t pos = 0;
	auto header = parse_header(bytes, &pos);
	try {
		std::map<std::string, std::string_view> sections;
		for (auto &s : header.at("sections")) {
			Reader len(bytes.substr(pos), "length");
			uint64_t n = len.u64();
			pos += sizeof(uint64_t);
			if (n != s.at("bytes").get<uint64_t>() || n > bytes.size() - pos) {
				throw DataError("model section " + s.at("name").get<std::string>() + " is truncated");
			}
			sections[s.at("name").get<std::string>()] = bytes.substr(pos, n);
			pos += n;
		}
		if (pos != bytes.size()) {
			throw DataError("model file has trailing bytes");
		}
		auto section = [&](const std::string &name) {
			auto it = sections.find(name);
			if (it == sections.end()) {
				throw DataError("model section " + name + " is missing");
			}
			return Reader(it->second, name);
		};

		Model m;
		m.catalog = Catalog::from_json(header.at("catalog"));
		m.config = config_from_json(header.at("config"));
		m.provenance = header.at("provenance").get<std::map<std::string, std::string>>();

		for (auto &b : header.at("bins")) {
			auto r = section(b.at("section").get<std::string>());
			auto values = r.array<int64_t>();
			auto bins = r.array<int32_t>();
			r.finish();
			int g = b.at("group").get<int>();
			m.bins.emplace(g, BinMap::from_arrays(g, bin_strategy_from_string(b.at("strategy").get<std::string>()),
			                                      b.at("num_bins").get<int>(), std::move(values), std::move(bins)));
		}
		for (auto &k : header.at("keys")) {
			auto key = KeyRef::parse(k.at("key").get<std::string>());
			auto rs = section(k.at("store_section").get<std::string>());
			auto values = rs.array<int64_t>();
			auto counts = rs.array<int64_t>();
			rs.finish();
			if (values.size() != counts.size()) {
				throw DataError("model value counts of " + key.str() + " are ragged");
			}
			ValueCountStore store;
			for (size_t i = 0; i < values.size(); ++i) {
				store.add(values[i], counts[i]);
			}
			m.stores[key] = std::move(store);
			auto rsum = section(k.at("summary_section").get<std::string>());
			KeyBinSummary sum;
			sum.total = rsum.array<int64_t>();
			sum.mfv = rsum.array<int64_t>();
			sum.ndv = rsum.array<int64_t>();
			rsum.finish();
			m.summaries[key] = std::move(sum);
		}
		for (auto &e : header.at("estimators")) {
			auto r = section(e.at("section").get<std::string>());
			TableEstimator est;
			est.kind = estimator_kind_from_string(e.at("kind").get<std::string>());
			if (r.pod<uint8_t>()) {
				est.table = read_table(r);
			}
			if (r.pod<uint8_t>()) {
				est.sample = read_sample(r);
			}
			if (r.pod<uint8_t>()) {
				est.chowliu = read_chowliu(r);
			}
			r.finish();
			m.estimators.emplace(e.at("table").get<std::string>(), std::move(est));
		}
		return m;
	} catch (const nlohmann::json::exception &e) {
		throw DataError(std::string("malformed model header: ") + e.what());
	} catch (const std::invalid_argument &e) {
		throw DataError(std::string("malformed model file: ") + e.what());
	}
}

nlohmann::json read_model_header(const std::filesystem::path &path) {
	return parse_header(read_file(path), nullptr);
}

ModelLock::ModelLock(const std::filesystem::path &model_path) : path_(model_path) {
	auto lock_path = model_path.string() + ".lock";
	fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
	if (fd_ < 0) {
		throw DataError("cannot open lock file " + lock_path + ": " + std::strerror(errno));
	}
	while (::flock(fd_, LOCK_EX) != 0) {
		if (errno != EINTR) {
			int err = errno;
			::close(fd_);
			throw DataError("cannot lock " + lock_path + ": " + std::strerror(err));
		}
	}
}

ModelLock::~ModelLock() {
	if (fd_ >= 0) {
		::flock(fd_, LOCK_UN);
		::close(fd_);
	}
}

void save_model(const Model &model, const std::filesystem::path &path) {
	ModelLock lock(path);
	save_model(model, path, lock);
}

void save_model(const Model &model, const std::filesystem::path &path, const ModelLock &held) {
	if (std::filesystem::absolute(held.model_path()) != std::filesystem::absolute(path)) {
		throw std::invalid_argument("lock is held for a different model file");
	}
	auto bytes = serialize_model(model);
	auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
	int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
	if (fd < 0) {
		throw DataError("cannot create " + tmp + ": " + std::strerror(errno));
	}
	try {
		write_all(fd, bytes, tmp);
		if (::fsync(fd) != 0) {
			throw DataError("cannot sync " + tmp + ": " + std::strerror(errno));
		}
	} catch (...) {
		::close(fd);
		::unlink(tmp.c_str());
		throw;
	}
	::close(fd);
	if (::rename(tmp.c_str(), path.c_str()) != 0) {
		int err = errno;
		::unlink(tmp.c_str());
		throw DataError("cannot replace " + path.string() + ": " + std::strerror(err));
	}
}

Model load_model(const std::filesystem::path &path) {
	return deserialize_model(read_file(path));
}

} // namespace fgcard
