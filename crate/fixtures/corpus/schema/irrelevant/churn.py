import pandas as pd
from sklearn.model_selection import train_test_split
from sklearn.tree import DecisionTreeClassifier


def train(path):
    frame = pd.read_csv(path)
    X_train, X_test, y_train, y_test = train_test_split(frame.drop(columns=["y"]), frame["y"])
    model = DecisionTreeClassifier().fit(X_train, y_train)
    return model.predict(X_test)
