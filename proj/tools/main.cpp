#include "decman/cli.hpp"

int main(int argc, char** argv) { return decman::run_cli(argc, argv); }
