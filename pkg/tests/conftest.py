import os

# mlflow>=3.x refuses file-store tracking URIs unless explicitly opted in
os.environ.setdefault('MLFLOW_ALLOW_FILE_STORE', 'true')
