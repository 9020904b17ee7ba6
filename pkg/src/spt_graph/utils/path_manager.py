from pathlib import Path


class PathManager:
    """路径管理器，确保所有写入操作使用正确的可写目录"""

    @staticmethod
    def get_config_dir():
        """获取配置文件目录"""
        return Path(__file__).parent.parent / "config"

    @staticmethod
    def get_config_path(file_name="config.yaml"):
        """获取配置文件的完整路径"""
        return PathManager.get_config_dir() / file_name

    @staticmethod
    def get_output_dir(out=None):
        """获取输出目录，相对路径以当前工作目录为基准"""
        output_dir = Path(out) if out else Path.cwd() / "output"
        output_dir.mkdir(parents=True, exist_ok=True)
        return output_dir

    @staticmethod
    def is_writable(path):
        """检查路径是否可写"""
        try:
            test_file = Path(path) / ".write_test"
            test_file.touch()
            test_file.unlink()
            return True
        except (OSError, PermissionError):
            return False
