#include "conelab/harness.hpp"

int main(int argc, char** argv) { return conelab::harness::cli_main(argc, argv); }
