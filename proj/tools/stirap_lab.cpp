#include "stirap_lab/cli.hpp"

int main(int argc, char** argv) { return stirap_lab::run_cli(argc, argv); }
