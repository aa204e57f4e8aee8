#pragma once

#include <stdexcept>
#include <string>

namespace memplan {

// Base for all domain errors. `name()` is the stable identifier the CLI
// prints on stderr (exit code 1); `what()` carries the human diagnostic.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& msg)
      : std::runtime_error(name + ": " + msg), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

#define MEMPLAN_DEFINE_ERROR(E)                                  \
  class E : public Error {                                       \
   public:                                                       \
    explicit E(const std::string& msg) : Error(#E, msg) {}       \
  }

MEMPLAN_DEFINE_ERROR(MalformedTrace);
MEMPLAN_DEFINE_ERROR(InvariantViolation);
MEMPLAN_DEFINE_ERROR(BlockOutOfRange);
MEMPLAN_DEFINE_ERROR(ZeroBandwidth);
MEMPLAN_DEFINE_ERROR(ChunkTooSmall);
MEMPLAN_DEFINE_ERROR(NoFeasibleChunkSize);
MEMPLAN_DEFINE_ERROR(OutOfRange);
MEMPLAN_DEFINE_ERROR(InfeasibleLayout);
MEMPLAN_DEFINE_ERROR(NoFeasibleConfig);
MEMPLAN_DEFINE_ERROR(DeadlockDetected);
MEMPLAN_DEFINE_ERROR(LedgerUnderflow);
MEMPLAN_DEFINE_ERROR(UnknownPreset);

#undef MEMPLAN_DEFINE_ERROR

}  // namespace memplan
