import boto3
import pandas as pd
from sklearn.ensemble import RandomForestClassifier
from sklearn.model_selection import train_test_split

s3 = boto3.client("s3")


def load(bucket, key):
    s3.download_file(bucket, key, "data.csv")
    return pd.read_csv("data.csv")


def train(frame):
    features = frame.drop(columns=["label"])
    X_train, X_test, y_train, y_test = train_test_split(features, frame["label"], test_size=0.2)
    model = RandomForestClassifier(n_estimators=100)
    model.fit(X_train, y_train)
    return model.score(X_test, y_test)
