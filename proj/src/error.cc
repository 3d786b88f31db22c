#include "statecheck/error.h"

namespace statecheck {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidWorkload: return "InvalidWorkload";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kNotAPermutation: return "NotAPermutation";
    case ErrorCode::kTransactionNotInExecution: return "TransactionNotInExecution";
    case ErrorCode::kOperationNotInTransaction: return "OperationNotInTransaction";
    case ErrorCode::kEmptySpan: return "EmptySpan";
    case ErrorCode::kMissingTimestamps: return "MissingTimestamps";
    case ErrorCode::kCyclicGraph: return "CyclicGraph";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kWitnessInvalid: return "WitnessInvalid";
    case ErrorCode::kUnfillableSkeleton: return "UnfillableSkeleton";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace statecheck
