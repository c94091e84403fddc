// doctest_main.cpp
// Shared test runner translation unit.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
