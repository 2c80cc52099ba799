#pragma once

// Built-in self checks behind the `verify` CLI subcommand: frozen PRNG and
// digest vectors, index-map laws, adjointness, wire round trips. Prints one
// line per check.

namespace fedhash {

// Returns the number of failed checks.
int run_verify();

}  // namespace fedhash
