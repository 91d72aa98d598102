#pragma once

#include <stdexcept>
#include <string>

namespace toda {

// base of every error raised by the library
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

class GridMismatch : public Error {
public:
  using Error::Error;
};

class EmptyPositiveSet : public Error {
public:
  using Error::Error;
};

class InfeasibleState : public Error {
public:
  using Error::Error;
};

class NotOnConstraint : public Error {
public:
  using Error::Error;
};

class InitInfeasible : public Error {
public:
  using Error::Error;
};

class BallOverlap : public Error {
public:
  using Error::Error;
};

class NegativeHeightDensity : public Error {
public:
  using Error::Error;
};

class InfeasibleTestFunction : public Error {
public:
  using Error::Error;
};

class IllConditionedFit : public Error {
public:
  using Error::Error;
};

class Inconclusive : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace toda
