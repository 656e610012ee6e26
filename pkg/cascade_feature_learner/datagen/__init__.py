from .synthetic import SyntheticDataset, generate_synthetic, load_truth, write_truth, zipf_counts

__all__ = ["SyntheticDataset", "generate_synthetic", "load_truth", "write_truth", "zipf_counts"]
