#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gibbsmf/sampler.hpp"

namespace gibbsmf {

inline constexpr int kSnapshotVersion = 1;

/// FNV-1a digest of everything that determines the chain: K, seed, burn-in,
/// priors, noise specs and data shapes. Thread count, split threshold and
/// nsamples are excluded since they do not change the draws.
std::uint64_t config_digest(const SessionConfig& cfg, const Problem& problem);

/// `key=value` manifest of a snapshot directory.
struct Manifest {
  std::map<std::string, std::string> values;

  const std::string& at(const std::string& key) const;
  static Manifest read(const std::string& dir);
};

/// Writes manifest.txt plus one Matrix Market array file per factor matrix,
/// hyperparameter set, link matrix, spike-and-slab state, noise precision and
/// prediction aggregate. Creates `dir` if needed.
void write_snapshot(const Session& session, const std::string& dir);

/// Restores `session` from `dir`. Throws DataError on version or digest
/// mismatch and on missing component files.
void read_snapshot(const std::string& dir, Session& session);

/// Writes the row and column factors of view 0 into `dir` (one posterior
/// sample, used by `predict`).
void write_sample(const Session& session, const std::string& dir);

}  // namespace gibbsmf
