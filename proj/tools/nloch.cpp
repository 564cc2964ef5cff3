#include "nloch/app.hpp"

int main(int argc, char** argv) { return nloch::run_cli(argc, argv); }
