#pragma once

// Umbrella header: the whole engine. Individual headers stay usable on
// their own; api.hpp is excluded here because it pulls in the HTTP stack —
// include it directly when serving.
#include "tierbac/catalog.hpp"
#include "tierbac/defaults.hpp"
#include "tierbac/dsl.hpp"
#include "tierbac/error.hpp"
#include "tierbac/events.hpp"
#include "tierbac/model.hpp"
#include "tierbac/persist.hpp"
#include "tierbac/types.hpp"
#include "tierbac/wire.hpp"
