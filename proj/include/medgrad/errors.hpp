#pragma once

#include <stdexcept>
#include <string>

namespace medgrad {

// Error taxonomy shared by all modules. Everything derives from Error so
// callers (CLI, bindings) can catch one type at the boundary.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/shape mismatches (wrong raster size, incompatible matmul, ...).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Violated call contract (non-scalar loss, empty dataset, bad label count).
class ContractError : public Error {
public:
    using Error::Error;
};

// Input is mathematically degenerate (zero-norm vector, ...).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Index out of range (cross-entropy target outside [0, K)).
class IndexError : public Error {
public:
    using Error::Error;
};

// Token or token id not present in the vocabulary.
class VocabularyError : public Error {
public:
    using Error::Error;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Malformed file content (checkpoint, PNG, manifest, config).
class FormatError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failure; message carries the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

// Caption/config text that does not match the expected grammar.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace medgrad
