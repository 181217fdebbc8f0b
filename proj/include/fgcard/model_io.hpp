#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fgcard/model.hpp"
#include "json.hpp"

namespace fgcard {

//! File magic, followed by a little-endian u64 header length, the JSON header and the binary sections. Each
//! section is a u64 length plus payload, listed in header order under "sections".
inline constexpr std::string_view MODEL_MAGIC = "FGCARD01";
inline constexpr int MODEL_FORMAT_VERSION = 1;

std::string serialize_model(const Model &model);
//! Throws DataError on a bad magic, an unsupported format_version or a truncated payload.
Model deserialize_model(std::string_view bytes);
//! JSON header only (no payload decoding).
nlohmann::json read_model_header(const std::filesystem::path &path);

//! Exclusive advisory lock on `<model>.lock` for the lifetime of the object. Blocks until acquired.
class ModelLock {
public:
	explicit ModelLock(const std::filesystem::path &model_path);
	~ModelLock();
	ModelLock(const ModelLock &) = delete;
	ModelLock &operator=(const ModelLock &) = delete;

	const std::filesystem::path &model_path() const {
		return path_;
	}

private:
	std::filesystem::path path_;
	int fd_ = -1;
};

//! Writes to a temporary file in the same directory and renames it over `path`, holding the model's lock.
void save_model(const Model &model, const std::filesystem::path &path);
//! Same, for a caller that already holds the lock of `path`.
void save_model(const Model &model, const std::filesystem::path &path, const ModelLock &held);
Model load_model(const std::filesystem::path &path);

} // namespace fgcard
