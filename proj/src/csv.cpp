#include "fgcard/csv.hpp"

#include "fgcard/error.hpp"

namespace fgcard {

bool CsvReader::next(std::vector<CsvField> &fields) {
	fields.clear();
	int c = in_.get();
	if (c == EOF) {
		return false;
	}
	record_line_ = line_;
	CsvField field;
	bool in_quotes = false;
	bool after_quote = false;
	while (true) {
		if (in_quotes) {
			if (c == EOF) {
				throw DataError("unterminated quoted field starting on line " + std::to_string(record_line_));
			}
			if (c == '"') {
				if (in_.peek() == '"') {
					in_.get();
					field.text.push_back('"');
				} else {
					in_quotes = false;
					after_quote = true;
				}
			} else {
				if (c == '\n') {
					++line_;
				}
				field.text.push_back(static_cast<char>(c));
			}
		} else if (c == ',') {
			fields.push_back(std::move(field));
			field = CsvField {};
			after_quote = false;
		} else if (c == '\n' || c == EOF) {
			if (c == '\n') {
				++line_;
			}
			if (!field.text.empty() && field.text.back() == '\r' && !after_quote) {
				field.text.pop_back();
			}
			fields.push_back(std::move(field));
			return true;
		} else if (c == '\r' && after_quote) {
			// tolerated before the line feed of a CRLF ending
		} else if (c == '"') {
			if (!field.text.empty() || after_quote) {
				throw DataError("stray quote on line " + std::to_string(line_));
			}
			in_quotes = true;
			field.quoted = true;
		} else {
			if (after_quote) {
				throw DataError("unexpected character after closing quote on line " + std::to_string(line_));
			}
			field.text.push_back(static_cast<char>(c));
		}
		c = in_.get();
	}
}

std::string csv_escape(const std::string &text) {
	bool needs_quotes = text.empty() || text.find_first_of(",\"\r\n") != std::string::npos;
	if (!needs_quotes) {
		return text;
	}
	std::string out = "\"";
	for (char ch : text) {
		if (ch == '"') {
			out += "\"\"";
		} else {
			out.push_back(ch);
		}
	}
	out.push_back('"');
	return out;
}

} // namespace fgcard
