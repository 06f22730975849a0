#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hadseg {

/// Coarse failure categories. Each maps to a CLI exit code and a stable
/// machine-readable prefix ("error[<class>]: ...").
enum class ErrorClass {
  kShape,
  kCapacity,
  kClassIndex,
  kConfig,
  kFormat,
  kData,
  kMetric,
  kNumeric,
};

std::string_view error_class_name(ErrorClass c);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), class_(cls) {}

  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

#define HADSEG_DEFINE_ERROR(Name, Cls)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {} \
  };

HADSEG_DEFINE_ERROR(ShapeError, kShape)
HADSEG_DEFINE_ERROR(CapacityError, kCapacity)
HADSEG_DEFINE_ERROR(ClassIndexError, kClassIndex)
HADSEG_DEFINE_ERROR(ConfigError, kConfig)
HADSEG_DEFINE_ERROR(FormatError, kFormat)
HADSEG_DEFINE_ERROR(DataError, kData)
HADSEG_DEFINE_ERROR(MetricError, kMetric)
HADSEG_DEFINE_ERROR(NumericError, kNumeric)

#undef HADSEG_DEFINE_ERROR

}  // namespace hadseg
