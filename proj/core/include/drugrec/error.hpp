#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace drugrec {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid call arguments (bad fractions, empty inputs, dimension mismatches).
class ArgumentError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// A file header is missing a required column.
class SchemaError : public Error {
public:
    SchemaError(const std::string& source, const std::string& column)
        : Error(source + ": missing column '" + column + "'"), column_(column) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

// A data row failed validation. row is the 1-based data row (header excluded).
class RowError : public Error {
public:
    RowError(const std::string& source, std::size_t row, const std::string& what)
        : Error(source + ": row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// Cross-table consistency failures (unknown drugs, missing exposures).
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::vector<std::string> offenders = {})
        : Error(what), offenders_(std::move(offenders)) {}
    const std::vector<std::string>& offenders() const noexcept { return offenders_; }

private:
    std::vector<std::string> offenders_;
};

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, std::size_t epoch)
        : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

// A metric is mathematically undefined for the given input.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

// Wraps a component failure with the pipeline stage that raised it.
// validation() is true when the cause was bad input rather than a failure.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what, bool validation = false)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)), validation_(validation) {}
    const std::string& stage() const noexcept { return stage_; }
    bool validation() const noexcept { return validation_; }

private:
    std::string stage_;
    bool validation_ = false;
};

// Non-fatal notes collected while loading or fitting.
struct Diagnostics {
    std::vector<std::string> messages;

    void note(std::string message) { messages.push_back(std::move(message)); }
    bool empty() const noexcept { return messages.empty(); }
};

}  // namespace drugrec
