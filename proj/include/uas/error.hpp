// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace uas {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define UAS_DEFINE_ERROR(Name)              \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

// feature store
UAS_DEFINE_ERROR(DimensionError);
UAS_DEFINE_ERROR(ValueError);
UAS_DEFINE_ERROR(DuplicateIdError);
UAS_DEFINE_ERROR(FormatError);
UAS_DEFINE_ERROR(CorruptionError);
UAS_DEFINE_ERROR(VersionError);
UAS_DEFINE_ERROR(IoError);

// heads, metrics, training
UAS_DEFINE_ERROR(EmptyInputError);
UAS_DEFINE_ERROR(LabelError);
UAS_DEFINE_ERROR(EmptyDatasetError);
UAS_DEFINE_ERROR(NumericError);
UAS_DEFINE_ERROR(ConfigError);

// strategies, subspaces
UAS_DEFINE_ERROR(RankError);
UAS_DEFINE_ERROR(InsufficientDataError);
UAS_DEFINE_ERROR(BasisError);

#undef UAS_DEFINE_ERROR

}  // namespace uas
