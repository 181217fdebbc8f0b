#pragma once

#include <istream>
#include <string>
#include <vector>

namespace fgcard {

struct CsvField {
	std::string text;
	bool quoted = false;
};

//! Streaming RFC-4180 reader. Accepts LF and CRLF line endings.
class CsvReader {
public:
	explicit CsvReader(std::istream &in) : in_(in) {
	}

	//! Reads the next record; returns false at end of input.
	bool next(std::vector<CsvField> &fields);
	//! 1-based line number where the last returned record started.
	size_t line() const {
		return record_line_;
	}

private:
	std::istream &in_;
	size_t line_ = 1;
	size_t record_line_ = 0;
};

std::string csv_escape(const std::string &text);

} // namespace fgcard
