#include "fmk/experiment.hpp"

int main(int argc, char** argv) { return fmk::run_cli(argc, argv); }
