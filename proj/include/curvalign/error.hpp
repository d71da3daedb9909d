#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace curvalign {

// Root of every error the library raises. `kind()` is a stable short name
// that the CLI prints next to the failing stage.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define CURVALIGN_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                         \
   public:                                                            \
    using Error::Error;                                               \
    const char* kind() const noexcept override { return #Name; }      \
  };

CURVALIGN_DEFINE_ERROR(ParseError)
CURVALIGN_DEFINE_ERROR(ValidationError)
CURVALIGN_DEFINE_ERROR(IoError)
CURVALIGN_DEFINE_ERROR(DegenerateInput)
CURVALIGN_DEFINE_ERROR(InvalidMetric)
CURVALIGN_DEFINE_ERROR(MetricUnavailable)
CURVALIGN_DEFINE_ERROR(IsolatedNode)
CURVALIGN_DEFINE_ERROR(InfeasibleTransport)
CURVALIGN_DEFINE_ERROR(FlowDiverged)
CURVALIGN_DEFINE_ERROR(NodeSetMismatch)
CURVALIGN_DEFINE_ERROR(NonFiniteExponential)
CURVALIGN_DEFINE_ERROR(ChannelUnavailable)
CURVALIGN_DEFINE_ERROR(EmptyCurvatureMap)
CURVALIGN_DEFINE_ERROR(SubsetTooSmall)
CURVALIGN_DEFINE_ERROR(TooFewSamples)
CURVALIGN_DEFINE_ERROR(ZeroVariance)
CURVALIGN_DEFINE_ERROR(InvalidSpec)

#undef CURVALIGN_DEFINE_ERROR

// Raised when a graph that must be connected is not. Retrying graph
// construction with a larger k_min is the usual remedy.
class DisconnectedGraph : public Error {
 public:
  explicit DisconnectedGraph(std::size_t components)
      : Error("graph is disconnected (" + std::to_string(components) +
              " components)"),
        components_(components) {}
  const char* kind() const noexcept override { return "DisconnectedGraph"; }
  std::size_t components() const noexcept { return components_; }

 private:
  std::size_t components_;
};

}  // namespace curvalign
