// Placeholder; full CLI arrives with the pipeline.
int main() { return 0; }
