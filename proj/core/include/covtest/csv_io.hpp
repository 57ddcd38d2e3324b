#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "covtest/covmodels.hpp"
#include "covtest/sampling.hpp"

namespace covtest {

// Dense form: one matrix row per line, comma separated.
void write_model_dense(std::ostream& os, const CovarianceModel& model);
// Compact Toeplitz form: a single line sigma_0,...,sigma_{p-1}.
void write_model_toeplitz(std::ostream& os, const CovarianceModel& model);

// Accepts either form; a single line is read as the compact Toeplitz form.
CovarianceModel read_model(std::istream& is);
CovarianceModel read_model_file(const std::filesystem::path& path);
void write_model_file(const std::filesystem::path& path, const CovarianceModel& model, bool toeplitz_form);

// One observation per line; masked entries are empty fields.
void write_sample(std::ostream& os, const MaskedSample& sample);
void write_sample_file(const std::filesystem::path& path, const MaskedSample& sample);

// Empty fields become mask 0. Without an explicit a, the observed fraction
// is used.
MaskedSample read_sample(std::istream& is, std::optional<double> a = std::nullopt);
MaskedSample read_sample_file(const std::filesystem::path& path, std::optional<double> a = std::nullopt);

}  // namespace covtest
