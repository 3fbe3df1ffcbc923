#pragma once

#include <stdexcept>
#include <string>

namespace hrc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario, parameter file or CLI input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class RejectReason {
  UnknownSubtask,
  AgentMismatch,
  IllegalTransition,
  PrecedenceViolation,
  MissingColor,
  WrongColor,
  OutOfStock,
  Claimed,
  LightRed,
};

const char* to_string(RejectReason reason);

/// An action that the subtask state machine (or the session) refuses.
class RejectedAction : public Error {
 public:
  RejectedAction(RejectReason reason, const std::string& what)
      : Error(what), reason_(reason) {}
  RejectReason reason() const { return reason_; }

 private:
  RejectReason reason_;
};

class EmptyTaskSet : public Error {
 public:
  using Error::Error;
};

class InfeasibleAllocation : public Error {
 public:
  using Error::Error;
};

class InfeasibleSchedule : public Error {
 public:
  using Error::Error;
};

class PlannerFault : public Error {
 public:
  using Error::Error;
};

}  // namespace hrc
