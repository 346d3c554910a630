#pragma once

#include <stdexcept>
#include <string>

namespace okgllm {

// Malformed record in an input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Triple or boundary row referencing an entity/relation that does not exist.
class IntegrityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Lookup of an unknown entity, relation, or region id.
class LookupError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/vector dimension mismatch.
class ShapeError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration value (invalid patch length, head split, horizon, ...).
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset problems: empty after filtering, segment too short, sentinel-only file.
class DataError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss during training; carries the epoch where it happened.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(int epoch, const std::string& what)
        : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what),
          epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

}  // namespace okgllm
