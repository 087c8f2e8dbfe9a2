#pragma once

// Loads a session from line-delimited JSON records:
//   {"prompt": "...", "seed": 1, "images": ["a.png", ...], "timestamp": "...", "n": 2}
// Image paths are relative to the records file. Records without images are
// generated through the gateway with their seed and n.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "ivg/gateway.hpp"
#include "ivg/store.hpp"

namespace ivg {

class ImportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ImportResult {
  Session session;
  std::size_t steps = 0;
  std::size_t images = 0;
};

// Validates every record before writing anything; any later failure removes
// the partially written session. Throws ImportError naming the bad line.
ImportResult import_records(ProvenanceStore& store, const std::filesystem::path& records_file,
                            const GenerationGateway* gateway, std::string title = {});

}  // namespace ivg
