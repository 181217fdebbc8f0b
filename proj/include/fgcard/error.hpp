#pragma once

#include <stdexcept>
#include <string>

namespace fgcard {

//! Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

//! Invalid schema descriptor or catalog lookup failure.
class SchemaError : public Error {
public:
	using Error::Error;
};

//! Malformed or inconsistent input data (CSV rows, deltas, model files).
class DataError : public Error {
public:
	using Error::Error;
};

//! SQL text or query IR that cannot be turned into a valid query.
class ParseError : public Error {
public:
	ParseError(const std::string &msg, int line, int column)
	    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg), line(line),
	      column(column) {
	}
	explicit ParseError(const std::string &msg) : Error(msg) {
	}

	int line = 0;
	int column = 0;
};

//! Failure while building or evaluating a factor graph.
class EstimationError : public Error {
public:
	using Error::Error;
};

} // namespace fgcard
