#ifndef RESPFLOW_ERRORS_HPP
#define RESPFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace respflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened/read/written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Input bytes or a structured document do not match the expected format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A precondition or configuration invariant was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class MissingLandmarkError : public Error {
public:
    explicit MissingLandmarkError(const std::string& landmark)
        : Error("missing landmark: " + landmark), landmark_(landmark) {}
    const std::string& landmark() const { return landmark_; }

private:
    std::string landmark_;
};

class DegenerateGridError : public Error {
public:
    using Error::Error;
};

class AllPointsLostError : public Error {
public:
    explicit AllPointsLostError(int frame_index)
        : Error("all points lost at frame " + std::to_string(frame_index)),
          frame_index_(frame_index) {}
    int frame_index() const { return frame_index_; }

private:
    int frame_index_;
};

class EmptySignalError : public Error {
public:
    using Error::Error;
};

/// Arithmetic produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

/// An error raised by one stage of the estimation pipeline, tagged with the
/// stage name so callers can tell where it happened.
class PipelineError : public Error {
public:
    PipelineError(const std::string& stage, const std::string& message)
        : Error(stage + ": " + message), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace respflow

#endif  // RESPFLOW_ERRORS_HPP
