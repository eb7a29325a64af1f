#pragma once

#include <stdexcept>
#include <string>

namespace cscdet {

/// Rectangle or cell query outside the structure it addresses.
class BoundsError : public std::out_of_range
{
public:
    using std::out_of_range::out_of_range;
};

/// Mismatched dimensions: window size, histogram bin count, vector length.
class ShapeError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Boosting could not start or continue (single-class input, inconsistent samples).
class TrainingError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable or missing files.
class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Syntactically or semantically malformed input records (annotations, model files).
class FormatError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A stored model was trained against a layout that differs from the one rebuilt from its config.
class LayoutMismatchError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation cannot produce a curve (e.g. no required annotations).
class EvaluationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace cscdet
