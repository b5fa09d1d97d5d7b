#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "pkg/cohort.hpp"
#include "pkg/error.hpp"

namespace testutil {

// Runs f, which must throw pkg::Error, and hands back the code.
inline pkg::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const pkg::Error& e) {
    return e.code();
  }
  FAIL("expected a pkg::Error");
  return pkg::ErrorCode::Io;
}

inline pkg::AdmissionRecord record(std::string patient, std::string admission,
                                   int64_t day, bool icu) {
  pkg::AdmissionRecord r;
  r.patient_id = std::move(patient);
  r.admission_id = std::move(admission);
  r.admit_time = day;
  r.icu_stay = icu;
  return r;
}

}  // namespace testutil
