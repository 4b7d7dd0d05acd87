#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mstates {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Malformed or unusable input data (bad file, bad dates, missing columns).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation that is mathematically undefined for the given input.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Number of worker threads used by parallel_for. Results never depend on it.
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Runs body(i) for i in [0, n). Each index is handled exactly once; callers
/// write into preallocated slots so output order is fixed. The first
/// exception thrown by any task is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// SHA-256 hex digest of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Reads a whole file; throws DataError if it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

std::vector<std::string> split(const std::string& line, char sep);
std::string trim(const std::string& s);

/// True if s is a valid YYYY-MM-DD calendar date.
bool is_iso_date(const std::string& s);

}  // namespace mstates
