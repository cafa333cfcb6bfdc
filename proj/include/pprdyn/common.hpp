#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pprdyn {

using NodeId = std::uint32_t;

// Inserting an edge with u == v. Kept distinct from plain invalid_argument so
// replay loops can tell a bad input file from a bad node id.
class SelfLoopError : public std::invalid_argument {
public:
    explicit SelfLoopError(NodeId u)
        : std::invalid_argument("self-loop rejected at node " + std::to_string(u)) {}
};

// Text input that does not parse; carries the 1-based line number.
class FormatError : public std::runtime_error {
public:
    FormatError(std::size_t line, const std::string& what_arg)
        : std::runtime_error("line " + std::to_string(line) + ": " + what_arg),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Solve requested from a node with degree zero; the walk has nowhere to go.
class DanglingNodeError : public std::runtime_error {
public:
    explicit DanglingNodeError(NodeId u)
        : std::runtime_error("dangling node " + std::to_string(u)) {}
};

// Sweep/iteration cap reached. The partial state lives in the caller's state
// object, which the solver mutates in place.
class IterationLimitError : public std::runtime_error {
public:
    explicit IterationLimitError(std::size_t sweeps)
        : std::runtime_error("iteration limit reached after " + std::to_string(sweeps) + " sweeps") {}
};

// Edge adjustment whose scaled endpoint is isolated. The state may be stale
// after this fires; callers are expected to fall back to a cold solve.
class DegreeZeroError : public std::runtime_error {
public:
    explicit DegreeZeroError(NodeId u)
        : std::runtime_error("adjustment endpoint " + std::to_string(u) + " has degree zero") {}
};

// Training loss left the reals; carries the epoch where it happened.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(int epoch)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch)),
          epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

// Dataset directory fails validation (shape mismatch, label gaps, bad ids).
class LoadError : public std::runtime_error {
public:
    explicit LoadError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// A solver state violated an invariant that the algorithms are supposed to
// maintain (e.g. a meaningfully negative solution coordinate at export).
class InternalInconsistencyError : public std::logic_error {
public:
    explicit InternalInconsistencyError(const std::string& what_arg)
        : std::logic_error(what_arg) {}
};

} // namespace pprdyn
