#include "bindlab/orchestrator.hpp"

int main(int argc, char** argv) { return bindlab::cli_main(argc, argv); }
