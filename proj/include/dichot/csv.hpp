#pragma once

#include <filesystem>

#include "dichot/dataset.hpp"

namespace dichot {

// Wide CSV format: header `subject_id,trt,y1,...,yJ`, one row per subject,
// empty field = missing. Values are written with 17 significant digits so a
// read/write round trip is exact.

TrialDataset read_wide_csv(const std::filesystem::path& path);
void write_wide_csv(const TrialDataset& dataset,
                    const std::filesystem::path& path);

}  // namespace dichot
